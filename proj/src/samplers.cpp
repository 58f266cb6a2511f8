#include "skipstep/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

#include "skipstep/errors.hpp"

namespace skipstep {

SamplerKind parse_sampler_kind(std::string_view name) {
    if (name == "ddpm") return SamplerKind::ddpm;
    if (name == "skipped") return SamplerKind::skipped;
    if (name == "ddim") return SamplerKind::ddim;
    if (name == "mixed") return SamplerKind::mixed;
    if (name == "naive_subset") return SamplerKind::naive_subset;
    throw ConfigError("unknown sampler kind '" + std::string(name) +
                      "' (expected ddpm|skipped|ddim|mixed|naive_subset)");
}

std::string_view to_string(SamplerKind kind) {
    switch (kind) {
        case SamplerKind::ddpm: return "ddpm";
        case SamplerKind::skipped: return "skipped";
        case SamplerKind::ddim: return "ddim";
        case SamplerKind::mixed: return "mixed";
        case SamplerKind::naive_subset: return "naive_subset";
    }
    return "?";
}

PlanScheme parse_plan_scheme(std::string_view name) {
    if (name == "uniform") return PlanScheme::uniform;
    if (name == "quadratic") return PlanScheme::quadratic;
    if (name == "explicit") return PlanScheme::explicit_list;
    throw ConfigError("unknown plan scheme '" + std::string(name) + "' (expected uniform|quadratic|explicit)");
}

std::string_view to_string(PlanScheme scheme) {
    switch (scheme) {
        case PlanScheme::uniform: return "uniform";
        case PlanScheme::quadratic: return "quadratic";
        case PlanScheme::explicit_list: return "explicit";
    }
    return "?";
}

StepPlan make_explicit_plan(std::vector<int> timesteps) {
    if (timesteps.size() < 2) throw ConfigError("step plan needs at least two timesteps");
    if (timesteps.back() != 0) throw ConfigError("step plan must end at 0");
    for (std::size_t i = 1; i < timesteps.size(); ++i)
        if (timesteps[i] >= timesteps[i - 1]) throw ConfigError("step plan must be strictly decreasing");
    return StepPlan{std::move(timesteps), PlanScheme::explicit_list};
}

StepPlan make_plan(int T, int K, PlanScheme scheme) {
    if (T < 1 || K < 1 || K > T) throw ConfigError("make_plan: need 1 <= K <= T");
    if (scheme == PlanScheme::explicit_list) throw ConfigError("make_plan: explicit plans are caller-provided");
    std::vector<int> ts;
    ts.reserve(static_cast<std::size_t>(K) + 1);
    for (int i = 0; i <= K; ++i) {
        double frac = 1.0 - static_cast<double>(i) / K;
        if (scheme == PlanScheme::quadratic) frac *= frac;
        const int t = static_cast<int>(std::lround(T * frac));
        if (ts.empty() || t < ts.back()) ts.push_back(t);
    }
    if (ts.back() != 0) ts.push_back(0);
    return StepPlan{std::move(ts), scheme};
}

StepPlan full_plan(int T) { return make_plan(T, T, PlanScheme::uniform); }

int cutoff_index_for_time(const StepPlan& plan, int t_c) {
    int k = 0;
    while (k < plan.steps() && plan.timesteps[static_cast<std::size_t>(k)] >= t_c) ++k;
    return k;
}

void SamplerConfig::validate(const NoiseSchedule& s) const {
    if (plan.timesteps.size() < 2) throw ConfigError("sampler: empty step plan");
    if (plan.T() != s.T())
        throw ConfigError("sampler: plan starts at " + std::to_string(plan.T()) + " but schedule has T = " +
                          std::to_string(s.T()));
    if (plan.timesteps.back() != 0) throw ConfigError("sampler: plan must end at 0");
    for (std::size_t i = 1; i < plan.timesteps.size(); ++i)
        if (plan.timesteps[i] >= plan.timesteps[i - 1]) throw ConfigError("sampler: plan not strictly decreasing");
    if (kind == SamplerKind::mixed && (cutoff_index < 0 || cutoff_index > plan.steps()))
        throw ConfigError("sampler.cutoff_index " + std::to_string(cutoff_index) + " outside [0, " +
                          std::to_string(plan.steps()) + "]");
    if (workers < 1) throw ConfigError("sampler: workers must be >= 1");
}

GaussianState GaussianState::standard(std::size_t dim) {
    return GaussianState{std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)};
}

namespace {

enum class Rule { ddpm, skipped, ddim, naive };

Rule rule_for(SamplerKind kind, int pair, int cutoff_index) {
    switch (kind) {
        case SamplerKind::ddpm: return Rule::ddpm;
        case SamplerKind::skipped: return Rule::skipped;
        case SamplerKind::ddim: return Rule::ddim;
        case SamplerKind::mixed: return pair < cutoff_index ? Rule::skipped : Rule::ddim;
        case SamplerKind::naive_subset: return Rule::naive;
    }
    return Rule::skipped;
}

// One reverse step t -> t_prev, with everything that depends only on the
// schedule precomputed.
//   ddpm / naive: x' = inv_sqrt_alpha (x - eps_coef eps) + noise_std z
//   skipped:      x' = x_coef x - eps_coef eps + noise_std z
//   ddim:         x0 = x_coef x - eps_coef eps;  x' = sqrt_ab_prev x0 + sqrt_one_minus_prev eps
struct Step {
    Rule rule;
    int t;
    int t_prev;
    double inv_sqrt_alpha = 0;
    double x_coef = 0;
    double eps_coef = 0;
    double noise_std = 0;
    double sqrt_ab_prev = 0;
    double sqrt_one_minus_prev = 0;
};

Step make_step(const NoiseSchedule& s, Rule rule, int t, int t_prev) {
    Step st{rule, t, t_prev};
    const double ab_t = s.alpha_bar(t);
    const SkipCoefficients c = skip_coefficients(s, t, t - t_prev);
    const bool last = t_prev == 0;
    switch (rule) {
        case Rule::ddpm: {
            // Respaced single-step form: the effective alpha of the pair.
            const double alpha = t_prev == t - 1 ? s.alpha(t) : ab_t / s.alpha_bar(t_prev);
            st.inv_sqrt_alpha = 1.0 / std::sqrt(alpha);
            st.eps_coef = (1.0 - alpha) / std::sqrt(1.0 - ab_t);
            st.noise_std = last ? 0.0 : std::sqrt(c.post_var);
            break;
        }
        case Rule::naive: {
            const double alpha = s.alpha(t);
            st.inv_sqrt_alpha = 1.0 / std::sqrt(alpha);
            st.eps_coef = (1.0 - alpha) / std::sqrt(1.0 - ab_t);
            st.noise_std = last ? 0.0 : std::sqrt(skip_coefficients(s, t, 1).post_var);
            break;
        }
        case Rule::skipped:
            st.x_coef = c.rev_coef_xt;
            st.eps_coef = c.rev_coef_eps;
            st.noise_std = last ? 0.0 : std::sqrt(c.post_var);
            break;
        case Rule::ddim: {
            const double ab_prev = s.alpha_bar(t_prev);
            st.x_coef = 1.0 / std::sqrt(ab_t);
            st.eps_coef = std::sqrt(1.0 - ab_t) / std::sqrt(ab_t);
            st.sqrt_ab_prev = std::sqrt(ab_prev);
            st.sqrt_one_minus_prev = std::sqrt(1.0 - ab_prev);
            break;
        }
    }
    return st;
}

std::vector<Step> build_steps(const NoiseSchedule& s, SamplerKind kind, std::span<const int> ts, int cutoff_index,
                              int first_pair) {
    std::vector<Step> steps;
    for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
        const int pair = first_pair + static_cast<int>(k);
        steps.push_back(make_step(s, rule_for(kind, pair, cutoff_index), ts[k], ts[k + 1]));
    }
    return steps;
}

void apply_step(const Step& st, const Batch& eps, Batch& x, std::size_t row_offset, std::uint32_t slot,
                const RandomSource& rng) {
    for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t j = 0; j < x.cols(); ++j) {
            const double xv = x(r, j);
            const double e = eps(r, j);
            double next = 0.0;
            switch (st.rule) {
                case Rule::ddpm:
                case Rule::naive: next = st.inv_sqrt_alpha * (xv - st.eps_coef * e); break;
                case Rule::skipped: next = st.x_coef * xv - st.eps_coef * e; break;
                case Rule::ddim: {
                    const double x0 = st.x_coef * xv - st.eps_coef * e;
                    next = st.sqrt_ab_prev * x0 + st.sqrt_one_minus_prev * e;
                    break;
                }
            }
            if (st.noise_std > 0.0)
                next += st.noise_std * rng.keyed_normal(row_offset + r, slot, static_cast<std::uint32_t>(j));
            x(r, j) = next;
        }
    }
}

Batch run_chain(const Denoiser& d, const std::vector<Step>& steps, Batch x, std::size_t row_offset,
                const RandomSource& rng) {
    for (std::size_t k = 0; k < steps.size(); ++k) {
        const Batch eps = d.predict_eps(x, steps[k].t);
        apply_step(steps[k], eps, x, row_offset, static_cast<std::uint32_t>(k + 1), rng);
    }
    return x;
}

}  // namespace

Batch initial_noise(std::size_t n, std::size_t dim, const RandomSource& rng) {
    Batch x(n, dim);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < dim; ++j) x(r, j) = rng.keyed_normal(r, 0, static_cast<std::uint32_t>(j));
    return x;
}

Batch run_sampler(const Denoiser& d, const NoiseSchedule& s, const SamplerConfig& cfg, const Batch& x_T,
                  const RandomSource& rng) {
    cfg.validate(s);
    if (d.timesteps() != s.T()) throw ConfigError("sampler: denoiser and schedule disagree on T");
    if (x_T.cols() != d.dim()) throw ConfigError("sampler: x_T dimension does not match denoiser");
    const auto steps = build_steps(s, cfg.kind, cfg.plan.timesteps, cfg.cutoff_index, 0);

    const std::size_t n = x_T.rows();
    const std::size_t workers = std::min<std::size_t>(cfg.workers, std::max<std::size_t>(n, 1));
    if (workers <= 1) return run_chain(d, steps, x_T, 0, rng);

    const std::size_t chunk = (n + workers - 1) / workers;
    std::vector<Batch> parts(workers);
    {
        std::vector<std::jthread> threads;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t first = w * chunk;
            if (first >= n) break;
            const std::size_t count = std::min(chunk, n - first);
            threads.emplace_back(
                [&, w, first, count] { parts[w] = run_chain(d, steps, x_T.slice(first, count), first, rng); });
        }
    }
    Batch out(n, x_T.cols());
    std::size_t pos = 0;
    for (const Batch& part : parts)
        for (double v : part.values()) out.values()[pos++] = v;
    return out;
}

Batch sample(const Denoiser& d, const NoiseSchedule& s, const SamplerConfig& cfg, std::size_t n,
             const RandomSource& rng) {
    return run_sampler(d, s, cfg, initial_noise(n, d.dim(), rng), rng);
}

Batch ddpm_sample(const Denoiser& d, const NoiseSchedule& s, std::size_t n, const RandomSource& rng) {
    return sample(d, s, SamplerConfig{SamplerKind::ddpm, full_plan(s.T())}, n, rng);
}

Batch skipped_sample(const Denoiser& d, const NoiseSchedule& s, const StepPlan& plan, std::size_t n,
                     const RandomSource& rng) {
    return sample(d, s, SamplerConfig{SamplerKind::skipped, plan}, n, rng);
}

Batch ddim_sample(const Denoiser& d, const NoiseSchedule& s, const StepPlan& plan, std::size_t n,
                  const RandomSource& rng) {
    return sample(d, s, SamplerConfig{SamplerKind::ddim, plan}, n, rng);
}

Batch mixed_sample(const Denoiser& d, const NoiseSchedule& s, const StepPlan& plan, int cutoff_index,
                   std::size_t n, const RandomSource& rng) {
    return sample(d, s, SamplerConfig{SamplerKind::mixed, plan, cutoff_index}, n, rng);
}

Batch naive_subset_sample(const Denoiser& d, const NoiseSchedule& s, const StepPlan& plan, std::size_t n,
                          const RandomSource& rng) {
    return sample(d, s, SamplerConfig{SamplerKind::naive_subset, plan}, n, rng);
}

GaussianState propagate_affine(const Denoiser& d, const NoiseSchedule& s, const SamplerConfig& cfg) {
    cfg.validate(s);
    return propagate_affine(d, s, cfg.kind, cfg.plan.timesteps, GaussianState::standard(d.dim()),
                            cfg.cutoff_index, 0);
}

GaussianState propagate_affine(const Denoiser& d, const NoiseSchedule& s, SamplerKind kind,
                               std::span<const int> timesteps, const GaussianState& initial, int cutoff_index,
                               int first_pair) {
    if (initial.mean.size() != d.dim() || initial.cov_diag.size() != d.dim())
        throw ConfigError("propagate_affine: initial state dimension mismatch");
    for (std::size_t k = 1; k < timesteps.size(); ++k)
        if (timesteps[k] >= timesteps[k - 1]) throw ConfigError("propagate_affine: timesteps must decrease");

    GaussianState state = initial;
    for (const Step& st : build_steps(s, kind, timesteps, cutoff_index, first_pair)) {
        const auto affine = d.affine_form(st.t);
        if (!affine) throw UnsupportedError("propagate_affine requires a denoiser with an affine form");
        for (std::size_t j = 0; j < d.dim(); ++j) {
            const double a = affine->scale[j];
            const double b = affine->offset[j];
            double gain = 0.0;
            double shift = 0.0;
            switch (st.rule) {
                case Rule::ddpm:
                case Rule::naive:
                    gain = st.inv_sqrt_alpha * (1.0 - st.eps_coef * a);
                    shift = -st.inv_sqrt_alpha * st.eps_coef * b;
                    break;
                case Rule::skipped:
                    gain = st.x_coef - st.eps_coef * a;
                    shift = -st.eps_coef * b;
                    break;
                case Rule::ddim: {
                    const double x0_gain = st.x_coef - st.eps_coef * a;
                    const double x0_shift = -st.eps_coef * b;
                    gain = st.sqrt_ab_prev * x0_gain + st.sqrt_one_minus_prev * a;
                    shift = st.sqrt_ab_prev * x0_shift + st.sqrt_one_minus_prev * b;
                    break;
                }
            }
            state.mean[j] = gain * state.mean[j] + shift;
            state.cov_diag[j] = gain * gain * state.cov_diag[j] + st.noise_std * st.noise_std;
        }
    }
    return state;
}

}  // namespace skipstep
