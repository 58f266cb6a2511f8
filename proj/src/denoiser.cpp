#include "skipstep/denoiser.hpp"

#include <cmath>

#include "skipstep/errors.hpp"

namespace skipstep {

GaussianOracle::GaussianOracle(std::vector<double> mu0, std::vector<double> var0, NoiseSchedule schedule)
    : mu0_(std::move(mu0)), var0_(std::move(var0)), schedule_(std::move(schedule)) {
    if (mu0_.empty() || mu0_.size() != var0_.size())
        throw ConfigError("GaussianOracle: mean and variance must be non-empty and equal length");
    for (double v : var0_)
        if (!(v > 0.0)) throw ConfigError("GaussianOracle: data variance must be > 0");
}

std::optional<DiagonalAffine> GaussianOracle::affine_form(int t) const {
    check_timestep(schedule_, t, 1);
    const double ab = schedule_.alpha_bar(t);
    const double sqrt_ab = std::sqrt(ab);
    const double sqrt_one_minus = std::sqrt(1.0 - ab);
    DiagonalAffine a{std::vector<double>(dim()), std::vector<double>(dim())};
    for (std::size_t j = 0; j < dim(); ++j) {
        const double marginal_var = ab * var0_[j] + (1.0 - ab);
        a.scale[j] = sqrt_one_minus / marginal_var;
        a.offset[j] = -a.scale[j] * sqrt_ab * mu0_[j];
    }
    return a;
}

Batch GaussianOracle::predict_eps(const Batch& x, int t) const {
    if (x.cols() != dim()) throw ConfigError("GaussianOracle: input dimension mismatch");
    const DiagonalAffine a = *affine_form(t);
    Batch out(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t j = 0; j < x.cols(); ++j) out(r, j) = a.scale[j] * x(r, j) + a.offset[j];
    return out;
}

Batch oracle_eps(const GaussianOracle& o, const Batch& x, int t) { return o.predict_eps(x, t); }

}  // namespace skipstep
