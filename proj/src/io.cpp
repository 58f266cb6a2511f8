#include "skipstep/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "skipstep/errors.hpp"

namespace skipstep {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void ensure_parent_dir(const std::filesystem::path& path) {
    const auto parent = path.parent_path();
    if (parent.empty()) return;
    std::error_code ec;
    std::filesystem::create_directories(parent, ec);
    if (ec) throw IoError("cannot create directory " + parent.string() + ": " + ec.message());
}

void write_batch_csv(const Batch& batch, const std::filesystem::path& path) {
    ensure_parent_dir(path);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    for (std::size_t j = 0; j < batch.cols(); ++j) out << (j ? "," : "") << 'x' << j;
    out << '\n';
    for (std::size_t r = 0; r < batch.rows(); ++r) {
        for (std::size_t j = 0; j < batch.cols(); ++j) out << (j ? "," : "") << format_double(batch(r, j));
        out << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

Batch read_batch_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw IoError(path.string() + " is empty");
    const std::size_t cols = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
    std::vector<double> values;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::size_t start = 0;
        std::size_t got = 0;
        while (start <= line.size()) {
            const std::size_t comma = std::min(line.find(',', start), line.size());
            double v = 0.0;
            const auto res = std::from_chars(line.data() + start, line.data() + comma, v);
            if (res.ec != std::errc{} || res.ptr != line.data() + comma)
                throw IoError(path.string() + ": malformed number on data row " + std::to_string(rows + 1));
            values.push_back(v);
            ++got;
            start = comma + 1;
        }
        if (got != cols) throw IoError(path.string() + ": row " + std::to_string(rows + 1) + " has wrong width");
        ++rows;
    }
    return Batch(rows, cols, std::move(values));
}

}  // namespace skipstep
