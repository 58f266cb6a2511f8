#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "skipstep/batch.hpp"
#include "skipstep/schedule.hpp"

namespace skipstep {

/// eps(x) = scale * x + offset, per coordinate.
struct DiagonalAffine {
    std::vector<double> scale;
    std::vector<double> offset;
};

/// Noise predictor eps_theta(x, t). Implementations are deterministic and
/// must be safe to call concurrently from several threads.
class Denoiser {
public:
    virtual ~Denoiser() = default;

    virtual std::size_t dim() const = 0;
    // Number of diffusion steps the predictor was built for.
    virtual int timesteps() const = 0;
    virtual Batch predict_eps(const Batch& x, int t) const = 0;

    // Exact affine form at timestep t, if the predictor is affine in x.
    virtual std::optional<DiagonalAffine> affine_form(int /*t*/) const { return std::nullopt; }
};

/// Optimal eps predictor for x0 ~ N(mu0, diag(var0)):
///   E[eps | x_t = x] = sqrt(1 - ab_t) (x - sqrt(ab_t) mu0) / (ab_t var0 + 1 - ab_t).
class GaussianOracle final : public Denoiser {
public:
    GaussianOracle(std::vector<double> mu0, std::vector<double> var0, NoiseSchedule schedule);

    std::size_t dim() const override { return mu0_.size(); }
    int timesteps() const override { return schedule_.T(); }
    Batch predict_eps(const Batch& x, int t) const override;
    std::optional<DiagonalAffine> affine_form(int t) const override;

    const std::vector<double>& mean() const { return mu0_; }
    const std::vector<double>& variance() const { return var0_; }
    const NoiseSchedule& schedule() const { return schedule_; }

private:
    std::vector<double> mu0_;
    std::vector<double> var0_;
    NoiseSchedule schedule_;
};

Batch oracle_eps(const GaussianOracle& o, const Batch& x, int t);

}  // namespace skipstep
