#include "skipstep/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "skipstep/errors.hpp"

namespace skipstep {

NoiseSchedule::NoiseSchedule(std::vector<double> alphas) : alpha_(std::move(alphas)) {
    if (alpha_.empty()) throw ConfigError("noise schedule needs T >= 1");
    alpha_bar_.reserve(alpha_.size() + 1);
    alpha_bar_.push_back(1.0);
    for (std::size_t i = 0; i < alpha_.size(); ++i) {
        const double a = alpha_[i];
        if (!(a > 0.0 && a < 1.0))
            throw ConfigError("alpha_" + std::to_string(i + 1) + " = " + std::to_string(a) +
                              " outside (0, 1)");
        alpha_bar_.push_back(alpha_bar_.back() * a);
    }
}

double NoiseSchedule::alpha(int t) const {
    check_timestep(*this, t, 1);
    return alpha_[static_cast<std::size_t>(t - 1)];
}

double NoiseSchedule::alpha_bar(int t) const {
    check_timestep(*this, t, 0);
    return alpha_bar_[static_cast<std::size_t>(t)];
}

void check_timestep(const NoiseSchedule& s, int t, int lo) {
    if (t < lo || t > s.T())
        throw IndexError("timestep " + std::to_string(t) + " outside [" + std::to_string(lo) + ", " +
                         std::to_string(s.T()) + "]");
}

NoiseSchedule make_linear_schedule(int T, double beta_start, double beta_end) {
    if (T < 1) throw ConfigError("linear schedule: T must be >= 1");
    if (!(beta_start > 0.0 && beta_end < 1.0 && beta_start <= beta_end))
        throw ConfigError("linear schedule: need 0 < beta_start <= beta_end < 1");
    std::vector<double> alphas(static_cast<std::size_t>(T));
    for (int i = 0; i < T; ++i) {
        const double frac = T == 1 ? 0.0 : static_cast<double>(i) / (T - 1);
        alphas[static_cast<std::size_t>(i)] = 1.0 - (beta_start + (beta_end - beta_start) * frac);
    }
    return NoiseSchedule(std::move(alphas));
}

NoiseSchedule make_cosine_schedule(int T, double offset) {
    if (T < 1) throw ConfigError("cosine schedule: T must be >= 1");
    if (!(offset >= 0.0)) throw ConfigError("cosine schedule: offset must be >= 0");
    auto f = [&](int t) {
        const double c = std::cos((static_cast<double>(t) / T + offset) / (1.0 + offset) * std::numbers::pi / 2);
        return c * c;
    };
    const double f0 = f(0);
    std::vector<double> alphas(static_cast<std::size_t>(T));
    double prev = 1.0;
    for (int t = 1; t <= T; ++t) {
        const double cur = f(t) / f0;
        alphas[static_cast<std::size_t>(t - 1)] = std::max(cur / prev, 0.001);
        prev = cur;
    }
    return NoiseSchedule(std::move(alphas));
}

SkipCoefficients skip_coefficients(const NoiseSchedule& s, int t, int m) {
    check_timestep(s, t, 1);
    if (m < 1 || m > t)
        throw IndexError("skip width m = " + std::to_string(m) + " outside [1, " + std::to_string(t) + "]");
    const double ab_t = s.alpha_bar(t);
    const double ab_p = s.alpha_bar(t - m);
    const double gap = ab_p - ab_t;

    SkipCoefficients c;
    c.t = t;
    c.t_prev = t - m;
    c.fwd_mean_scale = std::sqrt(ab_t / ab_p);
    c.fwd_var = 1.0 - ab_t / ab_p;
    c.post_coef_xt = std::sqrt(ab_t) * (1.0 - ab_p) / (std::sqrt(ab_p) * (1.0 - ab_t));
    c.post_coef_x0 = gap / (std::sqrt(ab_p) * (1.0 - ab_t));
    c.post_var = gap < 1e-300 ? 0.0 : std::max(0.0, gap * (1.0 - ab_p) / (ab_p * (1.0 - ab_t)));
    c.rev_coef_xt = ab_p / std::sqrt(ab_t * ab_p);
    c.rev_coef_eps = gap / std::sqrt(ab_t * ab_p * (1.0 - ab_t));
    return c;
}

std::vector<double> predict_x0(std::span<const double> x_t, std::span<const double> eps,
                               const NoiseSchedule& s, int t) {
    check_timestep(s, t, 1);
    if (x_t.size() != eps.size()) throw ConfigError("predict_x0: x_t and eps differ in dimension");
    const double ab = s.alpha_bar(t);
    const double inv_sqrt_ab = 1.0 / std::sqrt(ab);
    const double noise_scale = std::sqrt(1.0 - ab) / std::sqrt(ab);
    std::vector<double> out(x_t.size());
    for (std::size_t i = 0; i < x_t.size(); ++i) out[i] = x_t[i] * inv_sqrt_ab - noise_scale * eps[i];
    return out;
}

}  // namespace skipstep
