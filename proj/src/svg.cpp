#include "skipstep/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "skipstep/errors.hpp"
#include "skipstep/io.hpp"

namespace skipstep {

namespace {

constexpr double kWidth = 640;
constexpr double kHeight = 480;
constexpr double kMargin = 56;

const char* const kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void finish() {
        if (!std::isfinite(lo)) lo = 0, hi = 1;
        if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
        const double pad = 0.05 * (hi - lo);
        lo -= pad;
        hi += pad;
    }
    double map(double v, double a, double b) const { return a + (v - lo) / (hi - lo) * (b - a); }
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else if (c == '&') out += "&amp;";
        else out += c;
    }
    return out;
}

std::ofstream open_svg(const std::filesystem::path& path) {
    ensure_parent_dir(path);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    return out;
}

void axes(std::ofstream& out, const Range& xr, const Range& yr, const std::string& title, const std::string& xl,
          const std::string& yl) {
    const double x0 = kMargin, x1 = kWidth - kMargin / 2, y0 = kHeight - kMargin, y1 = kMargin / 2;
    out << "<rect x=\"" << x0 << "\" y=\"" << y1 << "\" width=\"" << x1 - x0 << "\" height=\"" << y0 - y1
        << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double fx = xr.lo + (xr.hi - xr.lo) * i / 4;
        const double fy = yr.lo + (yr.hi - yr.lo) * i / 4;
        out << "<text x=\"" << xr.map(fx, x0, x1) << "\" y=\"" << y0 + 16 << "\" text-anchor=\"middle\">" << fmt(fx)
            << "</text>\n";
        out << "<text x=\"" << x0 - 4 << "\" y=\"" << yr.map(fy, y0, y1) + 4 << "\" text-anchor=\"end\">" << fmt(fy)
            << "</text>\n";
    }
    out << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">" << escape(xl)
        << "</text>\n";
    out << "<text x=\"14\" y=\"" << (y0 + y1) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
        << (y0 + y1) / 2 << ")\">" << escape(yl) << "</text>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
        << "</text>\n";
}

}  // namespace

void write_scatter_svg(const Batch& points, const std::filesystem::path& path, const std::string& title,
                       const Batch* reference) {
    auto coords = [](const Batch& b, std::size_t r) {
        return b.cols() >= 2 ? std::pair{b(r, 0), b(r, 1)} : std::pair{static_cast<double>(r), b(r, 0)};
    };
    Range xr, yr;
    for (const Batch* b : {reference, &points}) {
        if (b == nullptr) continue;
        for (std::size_t r = 0; r < b->rows(); ++r) {
            const auto [x, y] = coords(*b, r);
            xr.add(x);
            yr.add(y);
        }
    }
    xr.finish();
    yr.finish();
    auto out = open_svg(path);
    axes(out, xr, yr, title, points.cols() >= 2 ? "x0" : "index", points.cols() >= 2 ? "x1" : "x0");
    const double x0 = kMargin, x1 = kWidth - kMargin / 2, y0 = kHeight - kMargin, y1 = kMargin / 2;
    auto draw = [&](const Batch& b, const char* colour) {
        for (std::size_t r = 0; r < b.rows(); ++r) {
            const auto [x, y] = coords(b, r);
            if (!std::isfinite(x) || !std::isfinite(y)) continue;
            out << "<circle cx=\"" << fmt(xr.map(x, x0, x1)) << "\" cy=\"" << fmt(yr.map(y, y0, y1))
                << "\" r=\"1.5\" fill=\"" << colour << "\" fill-opacity=\"0.5\"/>\n";
        }
    };
    if (reference != nullptr) draw(*reference, "#bbbbbb");
    draw(points, kPalette[0]);
    out << "</svg>\n";
}

void write_line_svg(const std::vector<LineSeries>& series, const std::filesystem::path& path,
                    const std::string& title, const std::string& x_label, const std::string& y_label) {
    Range xr, yr;
    for (const auto& s : series) {
        for (double v : s.x) xr.add(v);
        for (double v : s.y) yr.add(v);
    }
    xr.finish();
    yr.finish();
    auto out = open_svg(path);
    axes(out, xr, yr, title, x_label, y_label);
    const double x0 = kMargin, x1 = kWidth - kMargin / 2, y0 = kHeight - kMargin, y1 = kMargin / 2;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& s = series[i];
        const char* colour = kPalette[i % std::size(kPalette)];
        out << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\" points=\"";
        for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k)
            if (std::isfinite(s.y[k])) out << fmt(xr.map(s.x[k], x0, x1)) << ',' << fmt(yr.map(s.y[k], y0, y1)) << ' ';
        out << "\"/>\n";
        for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k)
            if (std::isfinite(s.y[k]))
                out << "<circle cx=\"" << fmt(xr.map(s.x[k], x0, x1)) << "\" cy=\"" << fmt(yr.map(s.y[k], y0, y1))
                    << "\" r=\"3\" fill=\"" << colour << "\"/>\n";
        out << "<text x=\"" << x1 - 8 << "\" y=\"" << y1 + 16 + 14 * i << "\" text-anchor=\"end\" fill=\"" << colour
            << "\">" << escape(s.label) << "</text>\n";
    }
    out << "</svg>\n";
}

}  // namespace skipstep
