#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "skipstep/batch.hpp"

namespace skipstep {

enum class DatasetKind { gaussian, gaussian_mixture, two_moons, swiss_roll_2d, checkerboard };

DatasetKind parse_dataset_kind(std::string_view name);
std::string_view to_string(DatasetKind kind);

/// Toy x0 distributions. Every kind is scaled to roughly unit range:
///
///  gaussian          N(mean, diag(var)); dimension = mean.size().
///  gaussian_mixture  component k with probability weights[k], then
///                    N(means[k], diag(vars[k])).
///  two_moons         theta ~ U[0, pi]; upper moon (cos theta, sin theta),
///                    lower moon (1 - cos theta, 0.5 - sin theta), each with
///                    probability 1/2; shifted by (-0.5, -0.25) to centre
///                    the pair; plus N(0, noise^2 I).
///  swiss_roll_2d     u ~ U[0, 1], theta = 1.5 pi (1 + 2u);
///                    (theta cos theta, theta sin theta) / 7 + N(0, noise^2 I).
///  checkerboard      x ~ U[-2, 2]; y ~ U[0, 1] - 2 * Bernoulli(1/2) + (floor(x) mod 2),
///                    both scaled by 1/2, so points fill alternate cells of
///                    a 4x4 board on [-1, 1]^2.
struct DatasetSpec {
    DatasetKind kind = DatasetKind::gaussian;
    std::size_t n = 1000;
    std::uint64_t seed = 0;
    std::vector<double> mean{0.0};
    std::vector<double> var{1.0};
    std::vector<std::vector<double>> means;
    std::vector<std::vector<double>> vars;
    std::vector<double> weights;
    double noise = 0.05;

    std::size_t dim() const;
    // Throws ConfigError on any violated invariant.
    void validate() const;
};

Batch generate(const DatasetSpec& spec);

/// Component index of each row, drawn exactly as `generate` draws them.
/// Only meaningful for gaussian_mixture.
std::vector<std::size_t> mixture_components(const DatasetSpec& spec);

}  // namespace skipstep
