#include "skipstep/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "skipstep/data.hpp"
#include "skipstep/denoiser.hpp"
#include "skipstep/forward.hpp"
#include "skipstep/metrics.hpp"
#include "skipstep/mlp.hpp"
#include "skipstep/samplers.hpp"
#include "skipstep/train.hpp"

namespace skipstep {

namespace {

using CoefFn = std::function<SkipCoefficients(const NoiseSchedule&, int, int)>;

double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

std::string sci(double v) {
    std::ostringstream s;
    s << std::scientific;
    s.precision(2);
    s << v;
    return s.str();
}

struct Moments {
    double mean = 0;
    double var = 0;
};

Moments column_moments(const Batch& b, std::size_t col) {
    Moments m;
    for (std::size_t r = 0; r < b.rows(); ++r) m.mean += b(r, col);
    m.mean /= static_cast<double>(b.rows());
    for (std::size_t r = 0; r < b.rows(); ++r) m.var += (b(r, col) - m.mean) * (b(r, col) - m.mean);
    m.var /= static_cast<double>(b.rows() - 1);
    return m;
}

// |z| scores of sample moments against a Gaussian target (mean, var).
std::pair<double, double> moment_scores(const Moments& got, double mean, double var, std::size_t n) {
    const double se_mean = std::sqrt(var / static_cast<double>(n));
    const double se_var = var * std::sqrt(2.0 / static_cast<double>(n - 1));
    return {std::abs(got.mean - mean) / std::max(se_mean, 1e-300), std::abs(got.var - var) / std::max(se_var, 1e-300)};
}

CheckResult check_schedule_invariants(const NoiseSchedule& s, const std::string& label) {
    double worst = 0.0;
    bool ok = s.alpha_bar(0) == 1.0;
    for (int t = 1; t <= s.T(); ++t) {
        ok = ok && s.alpha(t) > 0.0 && s.alpha(t) < 1.0 && s.alpha_bar(t) < s.alpha_bar(t - 1);
        worst = std::max(worst, rel_err(s.alpha_bar(t), s.alpha_bar(t - 1) * s.alpha(t)));
    }
    ok = ok && worst <= 1e-12;
    return {"schedule." + label + "_invariants", ok, "max cumulative rel err " + sci(worst)};
}

CheckResult check_composition(const CoefFn& coef) {
    const NoiseSchedule s = make_linear_schedule(50, 1e-4, 0.02);
    double worst = 0.0;
    for (int a = 0; a <= 50; ++a)
        for (int b = a + 1; b <= 50; ++b)
            for (int c = b + 1; c <= 50; ++c) {
                const auto ca = coef(s, c, c - a);
                const auto ba = coef(s, b, b - a);
                const auto cb = coef(s, c, c - b);
                worst = std::max(worst, rel_err(ca.fwd_mean_scale, cb.fwd_mean_scale * ba.fwd_mean_scale));
                worst = std::max(worst, rel_err(ca.fwd_var, cb.fwd_mean_scale * cb.fwd_mean_scale * ba.fwd_var + cb.fwd_var));
            }
    return {"schedule.forward_composition", worst <= 1e-10, "T=50 all triples, max rel err " + sci(worst)};
}

CheckResult check_m1_reduction(const NoiseSchedule& s, const CoefFn& coef) {
    double worst = 0.0;
    for (int t = 1; t <= s.T(); ++t) {
        const auto c = coef(s, t, 1);
        const double a = s.alpha(t), ab = s.alpha_bar(t), abp = s.alpha_bar(t - 1);
        worst = std::max(worst, std::abs(c.post_coef_xt - std::sqrt(a) * (1 - abp) / (1 - ab)));
        worst = std::max(worst, std::abs(c.post_coef_x0 - std::sqrt(abp) * (1 - a) / (1 - ab)));
        worst = std::max(worst, std::abs(c.post_var - (1 - a) * (1 - abp) / (1 - ab)));
    }
    return {"schedule.m1_reduction", worst <= 1e-12, "max abs err vs single-step posterior " + sci(worst)};
}

CheckResult check_eps_substitution(const NoiseSchedule& s, const CoefFn& coef, RandomSource& rng) {
    double worst = 0.0;
    for (int trial = 0; trial < 2000; ++trial) {
        const int t = static_cast<int>(rng.uniform_int(1, s.T()));
        const int m = static_cast<int>(rng.uniform_int(1, t));
        const double x = 3.0 * rng.normal();
        const double e = rng.normal();
        const auto c = coef(s, t, m);
        const double x0 = predict_x0(std::span(&x, 1), std::span(&e, 1), s, t)[0];
        const double lhs = c.rev_coef_xt * x - c.rev_coef_eps * e;
        const double rhs = c.post_coef_xt * x + c.post_coef_x0 * x0;
        worst = std::max(worst, std::abs(lhs - rhs) / std::max({1.0, std::abs(lhs), std::abs(rhs)}));
    }
    return {"schedule.eps_substitution", worst <= 1e-10, "max rel err " + sci(worst)};
}

// Grid-Bayes posterior for a scalar chain against the closed form.
CheckResult check_bruteforce_posterior(const CoefFn& coef) {
    const NoiseSchedule s = make_linear_schedule(5, 0.05, 0.3);
    const double x0 = 0.8;
    const double xt = -0.4;
    double worst = 0.0;
    for (int t = 1; t <= 5; ++t)
        for (int m = 1; m <= t; ++m) {
            const auto c = coef(s, t, m);
            const int tp = t - m;
            double mean = 0.0, var = 0.0;
            if (tp == 0) {
                mean = x0;  // q(x_0 | x_0) is a point mass
            } else {
                const double prior_mean = std::sqrt(s.alpha_bar(tp)) * x0;
                const double prior_var = 1.0 - s.alpha_bar(tp);
                const double lik_scale = std::sqrt(s.alpha_bar(t) / s.alpha_bar(tp));
                const double lik_var = 1.0 - s.alpha_bar(t) / s.alpha_bar(tp);
                const int n = 200001;
                const double lo = -10.0, hi = 10.0, h = (hi - lo) / (n - 1);
                double z = 0.0, m1 = 0.0, m2 = 0.0;
                for (int i = 0; i < n; ++i) {
                    const double x = lo + h * i;
                    const double r = xt - lik_scale * x;
                    const double d = x - prior_mean;
                    const double w = std::exp(-0.5 * r * r / lik_var - 0.5 * d * d / prior_var);
                    z += w;
                    m1 += w * x;
                    m2 += w * x * x;
                }
                mean = m1 / z;
                var = m2 / z - mean * mean;
            }
            worst = std::max(worst, std::abs(mean - (c.post_coef_xt * xt + c.post_coef_x0 * x0)));
            worst = std::max(worst, std::abs(var - c.post_var));
        }
    return {"schedule.bruteforce_posterior_T5", worst <= 1e-6, "all (t, m), max abs err " + sci(worst)};
}

CheckResult check_forward_moments(const NoiseSchedule& s, std::size_t n, RandomSource& rng) {
    const int t = std::max(1, s.T() / 2);
    const Batch x0(n, 1, 0.7);
    const Diffused d = diffuse_from_x0(x0, t, s, rng);
    const double ab = s.alpha_bar(t);
    const auto [zm, zv] = moment_scores(column_moments(d.x_t, 0), std::sqrt(ab) * 0.7, 1 - ab, n);
    return {"forward.diffuse_from_x0_moments", zm < 4.5 && zv < 4.5, "z(mean) " + sci(zm) + ", z(var) " + sci(zv)};
}

CheckResult check_forward_chain(const NoiseSchedule& s, std::size_t n, RandomSource& rng) {
    const int start = s.T() / 10, m1 = s.T() / 5, m2 = s.T() / 4;
    const Batch x_start = diffuse_from_x0(Batch(n, 1, 0.7), std::max(1, start), s, rng).x_t;
    const Batch chained = diffuse_skip(diffuse_skip(x_start, start + m1, m1, s, rng), start + m1 + m2, m2, s, rng);
    const Batch direct = diffuse_skip(x_start, start + m1 + m2, m1 + m2, s, rng);
    const Moments a = column_moments(chained, 0), b = column_moments(direct, 0);
    const double zm = std::abs(a.mean - b.mean) / std::sqrt((a.var + b.var) / static_cast<double>(n));
    const double zv = std::abs(a.var - b.var) / std::sqrt(2.0 * (a.var * a.var + b.var * b.var) / static_cast<double>(n));
    return {"forward.skip_chain_markov", zm < 4.5 && zv < 4.5, "z(mean) " + sci(zm) + ", z(var) " + sci(zv)};
}

CheckResult check_marginal_consistency(const NoiseSchedule& s, std::size_t n, RandomSource& rng) {
    DatasetSpec spec;
    spec.mean = {0.5};
    spec.var = {0.3};
    spec.n = n;
    spec.seed = rng.next_u64();
    const Batch x0 = generate(spec);
    const int t = s.T() / 2, m = s.T() / 5;
    const Batch xt = diffuse_from_x0(x0, t, s, rng).x_t;
    const Batch back = posterior_sample(xt, x0, t, m, s, rng);
    const double ab = s.alpha_bar(t - m);
    const auto [zm, zv] = moment_scores(column_moments(back, 0), std::sqrt(ab) * 0.5, ab * 0.3 + 1 - ab, n);
    return {"forward.posterior_marginal", zm < 4.5 && zv < 4.5, "z(mean) " + sci(zm) + ", z(var) " + sci(zv)};
}

CheckResult check_oracle_regression(RandomSource& rng) {
    const NoiseSchedule s({0.5});
    const GaussianOracle oracle({0.0}, {1.0}, s);
    double sum = 0.0, sum_sq = 0.0;
    std::size_t count = 0;
    for (int i = 0; i < 1000000; ++i) {
        const double x0 = rng.normal(), e = rng.normal();
        const double xt = std::sqrt(0.5) * x0 + std::sqrt(0.5) * e;
        if (std::abs(xt - 1.0) < 0.02) {
            sum += e;
            sum_sq += e * e;
            ++count;
        }
    }
    const double mean = sum / count;
    const double se = std::sqrt((sum_sq / count - mean * mean) / count);
    const double predicted = oracle.predict_eps(Batch(1, 1, 1.0), 1)(0, 0);
    const double z = std::abs(mean - predicted) / se;
    return {"denoiser.oracle_binned_regression", z < 4.0,
            "E[eps|x_t~1] " + sci(mean) + " vs " + sci(predicted) + ", z " + sci(z)};
}

CheckResult check_gradient(RandomSource& rng) {
    const NoiseSchedule s = make_linear_schedule(20, 0.01, 0.2);
    MlpDenoiser model({2, 8, 2}, s.T(), 4, rng);
    Batch x(5, 2), target(5, 2);
    for (double& v : x.values()) v = rng.normal();
    for (double& v : target.values()) v = rng.normal();
    const std::vector<int> ts{1, 4, 9, 15, 20};
    const std::vector<double> w{1.0, 0.5, 2.0, 1.0, 1.5};
    std::vector<double> grad;
    model.loss(x, ts, target, w, &grad);
    std::vector<double> p = model.parameters();
    double worst = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double keep = p[i];
        p[i] = keep + 1e-5;
        model.set_parameters(p);
        const double up = model.loss(x, ts, target, w);
        p[i] = keep - 1e-5;
        model.set_parameters(p);
        const double down = model.loss(x, ts, target, w);
        p[i] = keep;
        const double fd = (up - down) / 2e-5;
        worst = std::max(worst, std::abs(fd - grad[i]) / std::max({std::abs(fd), std::abs(grad[i]), 1e-6}));
    }
    model.set_parameters(p);
    return {"denoiser.gradient_finite_difference", worst <= 1e-4, "widths [2,8,2], max rel err " + sci(worst)};
}

CheckResult check_weights_positive(const NoiseSchedule& s) {
    double smallest = std::numeric_limits<double>::infinity();
    bool finite = true;
    for (int t = 1; t <= s.T(); ++t)
        for (int m = 1; m <= t; ++m) {
            const double w = skip_loss_weight(s, t, m);
            finite = finite && std::isfinite(w);
            smallest = std::min(smallest, w);
        }
    return {"denoiser.weighted_loss_positive", finite && smallest > 0.0, "min weight " + sci(smallest)};
}

GaussianOracle test_oracle(const NoiseSchedule& s, std::size_t dim) {
    std::vector<double> mu, var;
    for (std::size_t j = 0; j < dim; ++j) {
        mu.push_back(0.5 - 0.4 * static_cast<double>(j));
        var.push_back(0.3 + 0.5 * static_cast<double>(j));
    }
    return GaussianOracle(mu, var, s);
}

double max_abs_diff(const Batch& a, const Batch& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a.values()[i] - b.values()[i]));
    return worst;
}

std::vector<CheckResult> sampler_checks(const NoiseSchedule& s, std::size_t mc, std::uint64_t seed) {
    std::vector<CheckResult> out;
    const GaussianOracle oracle = test_oracle(s, 1);
    const RandomSource rng(seed, 1);
    const GaussianState data{oracle.mean(), oracle.variance()};

    {
        const Batch a = ddpm_sample(oracle, s, 200, rng);
        const Batch b = skipped_sample(oracle, s, full_plan(s.T()), 200, rng);
        const double d = max_abs_diff(a, b);
        out.push_back({"samplers.full_plan_equals_ddpm", d <= 1e-12, "max abs diff " + sci(d)});
    }
    {
        const int K = std::min(25, s.T());
        const StepPlan plan = make_plan(s.T(), K);
        const bool low = mixed_sample(oracle, s, plan, 0, 200, rng) == ddim_sample(oracle, s, plan, 200, rng);
        const bool high = mixed_sample(oracle, s, plan, plan.steps(), 200, rng) == skipped_sample(oracle, s, plan, 200, rng);
        out.push_back({"samplers.degenerate_cutoffs", low && high,
                       std::string("k_c=0 ") + (low ? "==" : "!=") + " ddim, k_c=K " + (high ? "==" : "!=") + " skipped"});
    }
    {
        const int a = s.T() / 3;
        const std::vector<int> whole{s.T(), a, 0};
        const std::vector<int> head{s.T(), a};
        const std::vector<int> tail{a, 0};
        const auto direct = propagate_affine(oracle, s, SamplerKind::skipped, whole, GaussianState::standard(1));
        const auto mid = propagate_affine(oracle, s, SamplerKind::skipped, head, GaussianState::standard(1));
        const auto composed = propagate_affine(oracle, s, SamplerKind::skipped, tail, mid);
        const double d = std::max(std::abs(direct.mean[0] - composed.mean[0]), std::abs(direct.cov_diag[0] - composed.cov_diag[0]));
        out.push_back({"samplers.markov_composition", d <= 1e-10, "max abs diff " + sci(d)});
    }
    {
        double prev = std::numeric_limits<double>::infinity();
        bool ok = true;
        std::string trail;
        for (int K : {1, 2, 5, 10, 25, 50, 100}) {
            if (K > s.T()) break;
            const double w = gaussian_w2(propagate_affine(oracle, s, SamplerConfig{SamplerKind::skipped, make_plan(s.T(), K)}), data);
            ok = ok && w <= prev + 1e-9;
            prev = w;
            trail += (trail.empty() ? "" : " ") + sci(w);
        }
        out.push_back({"samplers.skipped_w2_monotone", ok, "W2 by K: " + trail});
    }
    {
        bool ok = true;
        std::string detail;
        for (int K : {25, 50}) {
            if (K > s.T()) break;
            const StepPlan plan = make_plan(s.T(), K);
            const double ws = gaussian_w2(propagate_affine(oracle, s, SamplerConfig{SamplerKind::skipped, plan}), data);
            const double wn = gaussian_w2(propagate_affine(oracle, s, SamplerConfig{SamplerKind::naive_subset, plan}), data);
            ok = ok && ws < wn;
            detail += "K=" + std::to_string(K) + ": " + sci(ws) + " < " + sci(wn) + "; ";
        }
        out.push_back({"samplers.skipped_beats_naive_subset", ok, detail});
    }
    {
        const GaussianOracle oracle2 = test_oracle(s, 2);
        const int K = std::min(5, s.T());
        double worst = 0.0;
        for (SamplerKind kind : {SamplerKind::ddpm, SamplerKind::skipped, SamplerKind::ddim, SamplerKind::mixed,
                                 SamplerKind::naive_subset}) {
            SamplerConfig cfg{kind, kind == SamplerKind::ddpm ? full_plan(s.T()) : make_plan(s.T(), K), 2};
            cfg.workers = 4;
            const GaussianState exact = propagate_affine(oracle2, s, cfg);
            const Batch x = sample(oracle2, s, cfg, mc, rng);
            for (std::size_t j = 0; j < 2; ++j) {
                const auto [zm, zv] = moment_scores(column_moments(x, j), exact.mean[j], exact.cov_diag[j], mc);
                worst = std::max({worst, zm, zv});
            }
        }
        out.push_back({"samplers.affine_matches_monte_carlo", worst < 4.5, "max z-score " + sci(worst)});
    }
    return out;
}

CheckResult check_metrics(RandomSource& rng) {
    Batch a(300, 2), b(200, 2);
    for (double& v : a.values()) v = rng.normal();
    for (double& v : b.values()) v = 0.5 + rng.normal();
    Batch a2 = a, b2 = b;
    for (double& v : a2.values()) v += 3.0;
    for (double& v : b2.values()) v += 3.0;
    const std::uint64_t key = rng.next_u64();
    auto sw = [&](const Batch& x, const Batch& y) {
        RandomSource r(key);
        return sliced_wasserstein(x, y, 64, r);
    };
    double worst = 0.0;
    worst = std::max(worst, std::abs(sw(a, b) - sw(b, a)));
    worst = std::max(worst, std::abs(energy_distance(a, b) - energy_distance(b, a)));
    worst = std::max(worst, std::abs(mmd_rbf(a, b) - mmd_rbf(b, a)));
    worst = std::max(worst, std::abs(sw(a, b) - sw(a2, b2)));
    worst = std::max(worst, std::abs(energy_distance(a, b) - energy_distance(a2, b2)));
    const double self = std::max({sw(a, a), energy_distance(a, a), mmd_rbf(a, a)});
    return {"metrics.symmetry_translation_identity", worst <= 1e-10 && self <= 1e-12,
            "max asymmetry/shift err " + sci(worst) + ", self-distance " + sci(self)};
}

CheckResult check_data_determinism() {
    bool ok = true;
    for (DatasetKind kind : {DatasetKind::gaussian, DatasetKind::gaussian_mixture, DatasetKind::two_moons,
                             DatasetKind::swiss_roll_2d, DatasetKind::checkerboard}) {
        DatasetSpec spec;
        spec.kind = kind;
        spec.n = 500;
        spec.seed = 11;
        if (kind == DatasetKind::gaussian_mixture) {
            spec.means = {{-1.0, 0.0}, {1.0, 0.5}};
            spec.vars = {{0.1, 0.1}, {0.2, 0.05}};
            spec.weights = {0.3, 0.7};
        }
        ok = ok && generate(spec) == generate(spec);
    }
    return {"data.seed_determinism", ok, "all five kinds"};
}

}  // namespace

std::vector<CheckResult> run_verification(const VerifyOptions& opts,
                                          const std::function<void(const CheckResult&)>& progress) {
    const CoefFn coef = [&](const NoiseSchedule& s, int t, int m) {
        SkipCoefficients c = skip_coefficients(s, t, m);
        if (opts.corrupt_coefficients) {
            c.fwd_mean_scale *= 1.001;
            c.post_coef_x0 *= 1.001;
            c.rev_coef_eps *= 1.001;
        }
        return c;
    };
    const NoiseSchedule s = opts.schedule.build();
    // Forward-process checks need room for several skip widths.
    const NoiseSchedule fs = s.T() >= 10 ? s : make_linear_schedule(100);
    RandomSource rng(opts.seed, 9);
    const std::size_t n = std::max<std::size_t>(opts.mc_samples, 100);

    std::vector<CheckResult> results;
    auto record = [&](CheckResult r) {
        if (progress) progress(r);
        results.push_back(std::move(r));
    };
    record(check_schedule_invariants(s, "configured"));
    record(check_schedule_invariants(make_cosine_schedule(std::max(10, s.T())), "cosine"));
    record(check_composition(coef));
    record(check_m1_reduction(s, coef));
    record(check_eps_substitution(s, coef, rng));
    record(check_bruteforce_posterior(coef));
    record(check_forward_moments(fs, n, rng));
    record(check_forward_chain(fs, n, rng));
    record(check_marginal_consistency(fs, n, rng));
    record(check_oracle_regression(rng));
    record(check_gradient(rng));
    record(check_weights_positive(s));
    for (auto& r : sampler_checks(fs, n, opts.seed)) record(std::move(r));
    record(check_metrics(rng));
    record(check_data_determinism());
    return results;
}

}  // namespace skipstep
