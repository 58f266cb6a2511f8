#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>

#include "skipstep/batch.hpp"
#include "skipstep/random.hpp"
#include "skipstep/samplers.hpp"

namespace skipstep {

/// Exact 2-Wasserstein distance between diagonal Gaussians:
/// sqrt(|mu1 - mu2|^2 + sum_i (sqrt(v1_i) - sqrt(v2_i))^2).
double gaussian_w2(const GaussianState& a, const GaussianState& b);

/// Mean over `n_proj` random unit directions of the 1-D Wasserstein-1
/// distance between the sorted projections. The larger batch is randomly
/// subsampled to the size of the smaller one.
double sliced_wasserstein(const Batch& a, const Batch& b, std::size_t n_proj, RandomSource& rng);

/// 2 E|a - b| - E|a - a'| - E|b - b'|, within-sample terms as U-statistics
/// (zero for singletons), clamped at 0.
double energy_distance(const Batch& a, const Batch& b);

/// Biased (V-statistic) squared MMD with kernel exp(-|x - y|^2 / (2 h^2)).
double mmd_rbf(const Batch& a, const Batch& b, double bandwidth = 1.0);

/// Sample mean and unbiased per-dimension variance. Needs >= 2 rows.
GaussianState batch_moments(const Batch& a);

struct MetricReport {
    std::string sampler;
    int steps = 0;
    std::optional<int> cutoff_index;
    std::optional<int> cutoff_time;
    std::uint64_t seed = 0;
    bool ok = true;
    std::map<std::string, double> metrics;
    double wall_ms = 0.0;
};

}  // namespace skipstep
