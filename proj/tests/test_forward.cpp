#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "skipstep/errors.hpp"
#include "skipstep/forward.hpp"

using namespace skipstep;

namespace {

constexpr std::size_t kN = 100000;

struct ColumnStats {
    double mean;
    double var;
};

ColumnStats column(const Batch& b, std::size_t c) {
    double s1 = 0, s2 = 0;
    for (std::size_t r = 0; r < b.rows(); ++r) s1 += b(r, c);
    const double mean = s1 / b.rows();
    for (std::size_t r = 0; r < b.rows(); ++r) s2 += (b(r, c) - mean) * (b(r, c) - mean);
    return {mean, s2 / (b.rows() - 1)};
}

// |sample mean - mean| and |sample var - var| in standard errors, Gaussian data.
double z_mean(const ColumnStats& s, double mean, double var, std::size_t n) {
    return std::abs(s.mean - mean) / std::sqrt(var / n);
}
double z_var(const ColumnStats& s, double var, std::size_t n) {
    return std::abs(s.var - var) / (var * std::sqrt(2.0 / (n - 1)));
}

}  // namespace

TEST_CASE("diffuse_from_x0 moments and returned noise") {
    const NoiseSchedule s = make_linear_schedule(100);
    const Batch x0(kN, 2, 1.5);
    RandomSource rng(1);
    const int t = 40;
    const Diffused d = diffuse_from_x0(x0, t, s, rng);
    const double ab = s.alpha_bar(t);
    for (std::size_t c = 0; c < 2; ++c) {
        const auto st = column(d.x_t, c);
        CHECK(std::abs(st.mean - std::sqrt(ab) * 1.5) < 4 * std::sqrt((1 - ab) / kN));
        CHECK(std::abs(st.var - (1 - ab)) < 0.05 * (1 - ab));
    }
    for (std::size_t r = 0; r < 10; ++r)
        CHECK(std::abs(d.x_t(r, 0) - (std::sqrt(ab) * 1.5 + std::sqrt(1 - ab) * d.eps(r, 0))) < 1e-14);
}

TEST_CASE("diffuse_from_x0 is near-identity for alpha_bar close to 1") {
    const NoiseSchedule s({1.0 - 1e-14});
    const Batch x0(5, 3, -0.25);
    RandomSource rng(2);
    const Batch x = diffuse_from_x0(x0, 1, s, rng).x_t;
    for (double v : x.values()) CHECK(std::abs(v + 0.25) < 1e-6);
}

TEST_CASE("forward operations reject bad timesteps") {
    const NoiseSchedule s = make_linear_schedule(10);
    RandomSource rng(0);
    const Batch x(2, 1, 0.0);
    CHECK_THROWS_AS(diffuse_from_x0(x, 0, s, rng), IndexError);
    CHECK_THROWS_AS(diffuse_from_x0(x, 11, s, rng), IndexError);
    CHECK_THROWS_AS(diffuse_skip(x, 5, 6, s, rng), IndexError);
    CHECK_THROWS_AS(posterior_sample(x, x, 5, 0, s, rng), IndexError);
}

TEST_CASE("diffuse_skip from zero input has the forward variance") {
    const NoiseSchedule s = make_linear_schedule(100);
    RandomSource rng(3);
    const Batch y = diffuse_skip(Batch(kN, 1, 0.0), 60, 20, s, rng);
    const auto c = skip_coefficients(s, 60, 20);
    const auto st = column(y, 0);
    CHECK(z_mean(st, 0.0, c.fwd_var, kN) < 4);
    CHECK(z_var(st, c.fwd_var, kN) < 4);
}

TEST_CASE("diffuse_skip with m = 1 matches one forward step") {
    const NoiseSchedule s = make_linear_schedule(100);
    RandomSource rng(4);
    const Batch y = diffuse_skip(Batch(kN, 1, 2.0), 30, 1, s, rng);
    const auto st = column(y, 0);
    const double a = s.alpha(30);
    CHECK(z_mean(st, std::sqrt(a) * 2.0, 1 - a, kN) < 4);
    CHECK(z_var(st, 1 - a, kN) < 4);
}

TEST_CASE("chained skips match a single jump") {
    const NoiseSchedule s = make_linear_schedule(200);
    RandomSource rng(5);
    const Batch start(kN, 1, 0.7);
    const int t = 50, m1 = 30, m2 = 70;
    // start is at timestep t - m1 = 20.
    const Batch chained = diffuse_skip(diffuse_skip(start, t, m1, s, rng), t + m2, m2, s, rng);
    const Batch direct = diffuse_skip(start, t + m2, m1 + m2, s, rng);
    const auto a = column(chained, 0), b = column(direct, 0);
    const double se_mean = std::sqrt((a.var + b.var) / kN);
    const double se_var = std::sqrt(2.0 / kN) * std::sqrt(a.var * a.var + b.var * b.var);
    CHECK(std::abs(a.mean - b.mean) < 4 * se_mean);
    CHECK(std::abs(a.var - b.var) < 4 * se_var);
}

TEST_CASE("zero posterior variance is deterministic") {
    const NoiseSchedule s({0.6});
    RandomSource rng(6);
    const Batch xt(3, 2, 0.4), x0(3, 2, -1.0);
    const Batch y = posterior_sample(xt, x0, 1, 1, s, rng);
    const auto c = skip_coefficients(s, 1, 1);
    for (double v : y.values()) CHECK(std::abs(v - (c.post_coef_xt * 0.4 - c.post_coef_x0)) < 1e-15);
    CHECK(std::abs(c.post_coef_x0 - 1.0) < 1e-15);
}

TEST_CASE("posterior_sample moments match grid Bayes") {
    const std::vector<double> alphas{0.95, 0.9, 0.85, 0.8, 0.75};
    const NoiseSchedule s(alphas);
    RandomSource rng(7);
    const double xt = 0.9, x0v = -0.4;
    const auto grid = oracle::grid_posterior(alphas, 5, 3, xt, x0v);
    const Batch y = posterior_sample(Batch(kN, 1, xt), Batch(kN, 1, x0v), 5, 3, s, rng);
    const auto st = column(y, 0);
    CHECK(z_mean(st, grid.mean, grid.var, kN) < 4);
    CHECK(z_var(st, grid.var, kN) < 4);
}

TEST_CASE("posterior sampling preserves the forward marginal") {
    const NoiseSchedule s = make_linear_schedule(100);
    RandomSource rng(8);
    Batch x0(kN, 1);
    for (std::size_t r = 0; r < kN; ++r) x0(r, 0) = 0.5 + 0.3 * rng.normal();
    const int t = 80, m = 35;
    const Batch xt = diffuse_from_x0(x0, t, s, rng).x_t;
    const Batch back = posterior_sample(xt, x0, t, m, s, rng);
    const double ab = s.alpha_bar(t - m);
    const double mean = std::sqrt(ab) * 0.5, var = ab * 0.09 + 1 - ab;
    const auto st = column(back, 0);
    CHECK(z_mean(st, mean, var, kN) < 4);
    CHECK(z_var(st, var, kN) < 4.5);
}

TEST_CASE("forward operations are deterministic in the seed") {
    const NoiseSchedule s = make_linear_schedule(20);
    const Batch x0(50, 2, 0.3);
    RandomSource a(9), b(9);
    CHECK(diffuse_from_x0(x0, 7, s, a).x_t == diffuse_from_x0(x0, 7, s, b).x_t);
    CHECK(diffuse_skip(x0, 7, 3, s, a) == diffuse_skip(x0, 7, 3, s, b));
    CHECK(posterior_sample(x0, x0, 7, 3, s, a) == posterior_sample(x0, x0, 7, 3, s, b));
}
