#include "skipstep/forward.hpp"

#include <cmath>

#include "skipstep/errors.hpp"

namespace skipstep {

Diffused diffuse_from_x0(const Batch& x0, int t, const NoiseSchedule& s, RandomSource& rng) {
    check_timestep(s, t, 1);
    const double mean_scale = std::sqrt(s.alpha_bar(t));
    const double noise_scale = std::sqrt(1.0 - s.alpha_bar(t));
    Diffused out{Batch(x0.rows(), x0.cols()), Batch(x0.rows(), x0.cols())};
    for (std::size_t i = 0; i < x0.size(); ++i) {
        const double e = rng.normal();
        out.eps.values()[i] = e;
        out.x_t.values()[i] = mean_scale * x0.values()[i] + noise_scale * e;
    }
    return out;
}

Diffused diffuse_from_x0(const Batch& x0, std::span<const int> t, const NoiseSchedule& s,
                         RandomSource& rng) {
    if (t.size() != x0.rows()) throw ConfigError("diffuse_from_x0: one timestep per row required");
    Diffused out{Batch(x0.rows(), x0.cols()), Batch(x0.rows(), x0.cols())};
    for (std::size_t r = 0; r < x0.rows(); ++r) {
        check_timestep(s, t[r], 1);
        const double mean_scale = std::sqrt(s.alpha_bar(t[r]));
        const double noise_scale = std::sqrt(1.0 - s.alpha_bar(t[r]));
        for (std::size_t c = 0; c < x0.cols(); ++c) {
            const double e = rng.normal();
            out.eps(r, c) = e;
            out.x_t(r, c) = mean_scale * x0(r, c) + noise_scale * e;
        }
    }
    return out;
}

Batch diffuse_skip(const Batch& x_prev, int t, int m, const NoiseSchedule& s, RandomSource& rng) {
    const SkipCoefficients c = skip_coefficients(s, t, m);
    const double noise_scale = std::sqrt(c.fwd_var);
    Batch out(x_prev.rows(), x_prev.cols());
    for (std::size_t i = 0; i < x_prev.size(); ++i)
        out.values()[i] = c.fwd_mean_scale * x_prev.values()[i] + noise_scale * rng.normal();
    return out;
}

Batch posterior_sample(const Batch& x_t, const Batch& x0, int t, int m, const NoiseSchedule& s,
                       RandomSource& rng) {
    if (x_t.rows() != x0.rows() || x_t.cols() != x0.cols())
        throw ConfigError("posterior_sample: x_t and x0 shapes differ");
    const SkipCoefficients c = skip_coefficients(s, t, m);
    const double noise_scale = std::sqrt(c.post_var);
    Batch out(x_t.rows(), x_t.cols());
    for (std::size_t i = 0; i < x_t.size(); ++i) {
        const double mean = c.post_coef_xt * x_t.values()[i] + c.post_coef_x0 * x0.values()[i];
        // A zero-variance posterior consumes no draw.
        out.values()[i] = noise_scale > 0.0 ? mean + noise_scale * rng.normal() : mean;
    }
    return out;
}

}  // namespace skipstep
