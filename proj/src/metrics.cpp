#include "skipstep/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "skipstep/errors.hpp"

namespace skipstep {

namespace {

void require_same_dim(const Batch& a, const Batch& b, const char* what) {
    if (a.rows() == 0 || b.rows() == 0) throw ConfigError(std::string(what) + ": empty batch");
    if (a.cols() != b.cols()) throw ConfigError(std::string(what) + ": dimension mismatch");
}

double distance(std::span<const double> x, std::span<const double> y) {
    double sq = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) sq += (x[j] - y[j]) * (x[j] - y[j]);
    return std::sqrt(sq);
}

// Mean pairwise distance; `within` skips the diagonal and divides by n(n-1).
double mean_distance(const Batch& a, const Batch& b, bool within) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const auto ai = a.row(i);
        for (std::size_t k = within ? i + 1 : 0; k < b.rows(); ++k) sum += distance(ai, b.row(k));
    }
    if (!within) return sum / (static_cast<double>(a.rows()) * static_cast<double>(b.rows()));
    const double n = static_cast<double>(a.rows());
    return a.rows() < 2 ? 0.0 : 2.0 * sum / (n * (n - 1.0));
}

// Rows chosen by a partial Fisher-Yates shuffle, kept in original order.
Batch subsample(const Batch& x, std::size_t count, RandomSource& rng) {
    std::vector<std::size_t> idx(x.rows());
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < count; ++i) {
        const auto j = static_cast<std::size_t>(
            rng.uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(idx.size()) - 1));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(count);
    std::sort(idx.begin(), idx.end());
    Batch out(count, x.cols());
    for (std::size_t r = 0; r < count; ++r)
        for (std::size_t j = 0; j < x.cols(); ++j) out(r, j) = x(idx[r], j);
    return out;
}

}  // namespace

double gaussian_w2(const GaussianState& a, const GaussianState& b) {
    if (a.mean.size() != b.mean.size() || a.cov_diag.size() != b.cov_diag.size() ||
        a.mean.size() != a.cov_diag.size())
        throw ConfigError("gaussian_w2: dimension mismatch");
    double sq = 0.0;
    for (std::size_t j = 0; j < a.mean.size(); ++j) {
        const double dm = a.mean[j] - b.mean[j];
        const double ds = std::sqrt(a.cov_diag[j]) - std::sqrt(b.cov_diag[j]);
        sq += dm * dm + ds * ds;
    }
    return std::sqrt(sq);
}

double sliced_wasserstein(const Batch& a, const Batch& b, std::size_t n_proj, RandomSource& rng) {
    require_same_dim(a, b, "sliced_wasserstein");
    if (n_proj < 1) throw ConfigError("sliced_wasserstein: n_proj must be >= 1");
    const std::size_t n = std::min(a.rows(), b.rows());
    const Batch sa = a.rows() > n ? subsample(a, n, rng) : a;
    const Batch sb = b.rows() > n ? subsample(b, n, rng) : b;

    const std::size_t dim = a.cols();
    std::vector<double> dir(dim);
    std::vector<double> pa(n);
    std::vector<double> pb(n);
    double total = 0.0;
    for (std::size_t p = 0; p < n_proj; ++p) {
        double norm = 0.0;
        do {
            norm = 0.0;
            for (double& v : dir) {
                v = rng.normal();
                norm += v * v;
            }
        } while (norm == 0.0);
        norm = std::sqrt(norm);
        for (double& v : dir) v /= norm;
        for (std::size_t r = 0; r < n; ++r) {
            double xa = 0.0;
            double xb = 0.0;
            for (std::size_t j = 0; j < dim; ++j) {
                xa += dir[j] * sa(r, j);
                xb += dir[j] * sb(r, j);
            }
            pa[r] = xa;
            pb[r] = xb;
        }
        std::sort(pa.begin(), pa.end());
        std::sort(pb.begin(), pb.end());
        double w1 = 0.0;
        for (std::size_t r = 0; r < n; ++r) w1 += std::abs(pa[r] - pb[r]);
        total += w1 / static_cast<double>(n);
    }
    return total / static_cast<double>(n_proj);
}

double energy_distance(const Batch& a, const Batch& b) {
    require_same_dim(a, b, "energy_distance");
    const double cross = mean_distance(a, b, false);
    const double value = 2.0 * cross - mean_distance(a, a, true) - mean_distance(b, b, true);
    return std::max(0.0, value);
}

double mmd_rbf(const Batch& a, const Batch& b, double bandwidth) {
    require_same_dim(a, b, "mmd_rbf");
    if (!(bandwidth > 0.0)) throw ConfigError("mmd_rbf: bandwidth must be > 0");
    const double scale = -0.5 / (bandwidth * bandwidth);
    auto mean_kernel = [&](const Batch& x, const Batch& y) {
        double sum = 0.0;
        for (std::size_t i = 0; i < x.rows(); ++i)
            for (std::size_t k = 0; k < y.rows(); ++k) {
                const double dist = distance(x.row(i), y.row(k));
                sum += std::exp(scale * dist * dist);
            }
        return sum / (static_cast<double>(x.rows()) * static_cast<double>(y.rows()));
    };
    return std::max(0.0, mean_kernel(a, a) + mean_kernel(b, b) - 2.0 * mean_kernel(a, b));
}

GaussianState batch_moments(const Batch& a) {
    if (a.rows() < 2) throw ConfigError("batch_moments: need at least 2 samples");
    const auto n = static_cast<double>(a.rows());
    GaussianState g{std::vector<double>(a.cols(), 0.0), std::vector<double>(a.cols(), 0.0)};
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t j = 0; j < a.cols(); ++j) g.mean[j] += a(r, j);
    for (double& m : g.mean) m /= n;
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t j = 0; j < a.cols(); ++j) {
            const double d = a(r, j) - g.mean[j];
            g.cov_diag[j] += d * d;
        }
    for (double& v : g.cov_diag) v /= n - 1.0;
    return g;
}

}  // namespace skipstep
