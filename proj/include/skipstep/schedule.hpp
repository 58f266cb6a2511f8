#pragma once

#include <span>
#include <vector>

namespace skipstep {

/// Per-step retention factors alpha_1..alpha_T and their running product
/// alpha_bar_0..alpha_bar_T with alpha_bar_0 = 1. Timesteps are 1-indexed;
/// index 0 is clean data. Immutable after construction.
class NoiseSchedule {
public:
    /// Validates 0 < alpha_t < 1 and builds alpha_bar by running product.
    explicit NoiseSchedule(std::vector<double> alphas);

    int T() const { return static_cast<int>(alpha_.size()); }
    // 1 <= t <= T
    double alpha(int t) const;
    // 0 <= t <= T
    double alpha_bar(int t) const;

    std::span<const double> alphas() const { return alpha_; }
    std::span<const double> alpha_bars() const { return alpha_bar_; }

private:
    std::vector<double> alpha_;
    std::vector<double> alpha_bar_;
};

/// beta linearly spaced over [beta_start, beta_end] inclusive, alpha = 1 - beta.
NoiseSchedule make_linear_schedule(int T, double beta_start = 1e-4, double beta_end = 0.02);

/// alpha_bar_t = f(t)/f(0), f(t) = cos^2(((t/T + offset)/(1 + offset)) * pi/2),
/// with per-step alpha clipped from below at 0.001.
NoiseSchedule make_cosine_schedule(int T, double offset = 0.008);

/// Coefficients of the m-step forward kernel q(x_t | x_{t-m}), the m-step
/// posterior q(x_{t-m} | x_t, x_0), and the eps-parameterized reverse mean.
struct SkipCoefficients {
    int t = 0;
    int t_prev = 0;
    double fwd_mean_scale = 0;  // sqrt(ab_t / ab_prev)
    double fwd_var = 0;         // 1 - ab_t / ab_prev
    double post_coef_xt = 0;
    double post_coef_x0 = 0;
    double post_var = 0;
    double rev_coef_xt = 0;   // ab_prev / sqrt(ab_t ab_prev)
    double rev_coef_eps = 0;  // (ab_prev - ab_t) / sqrt(ab_t ab_prev (1 - ab_t))
};

/// Throws IndexError unless 1 <= t <= T and 1 <= m <= t.
SkipCoefficients skip_coefficients(const NoiseSchedule& s, int t, int m);

/// x_0 = x_t / sqrt(ab_t) - sqrt(1 - ab_t) / sqrt(ab_t) * eps, elementwise.
std::vector<double> predict_x0(std::span<const double> x_t, std::span<const double> eps,
                               const NoiseSchedule& s, int t);

// Throws IndexError if t is not in [lo, T].
void check_timestep(const NoiseSchedule& s, int t, int lo = 1);

}  // namespace skipstep
