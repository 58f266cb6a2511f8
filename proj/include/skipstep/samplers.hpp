#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "skipstep/batch.hpp"
#include "skipstep/denoiser.hpp"
#include "skipstep/random.hpp"
#include "skipstep/schedule.hpp"

namespace skipstep {

enum class SamplerKind { ddpm, skipped, ddim, mixed, naive_subset };
enum class PlanScheme { uniform, quadratic, explicit_list };

SamplerKind parse_sampler_kind(std::string_view name);
std::string_view to_string(SamplerKind kind);
PlanScheme parse_plan_scheme(std::string_view name);
std::string_view to_string(PlanScheme scheme);

/// Strictly decreasing timesteps T = t_0 > t_1 > ... > t_K = 0. Pair k is
/// the reverse step t_k -> t_{k+1}.
struct StepPlan {
    std::vector<int> timesteps;
    PlanScheme scheme = PlanScheme::uniform;

    int steps() const { return static_cast<int>(timesteps.size()) - 1; }
    int T() const { return timesteps.front(); }
};

/// uniform:   round(T (1 - i/K)),   i = 0..K
/// quadratic: round(T (1 - i/K)^2), i = 0..K
/// Duplicates are dropped, so a quadratic plan may have fewer than K steps.
StepPlan make_plan(int T, int K, PlanScheme scheme = PlanScheme::uniform);
StepPlan make_explicit_plan(std::vector<int> timesteps);
StepPlan full_plan(int T);

// Number of leading plan pairs whose start timestep is >= t_c.
int cutoff_index_for_time(const StepPlan& plan, int t_c);

struct SamplerConfig {
    SamplerKind kind = SamplerKind::skipped;
    StepPlan plan;
    // Mixed only: the first `cutoff_index` pairs use the skipped-step update,
    // the remaining pairs use DDIM.
    int cutoff_index = 0;
    // Row partitions sampled on separate threads; output does not depend on it.
    unsigned workers = 1;

    // Plan timestep reached after `cutoff_index` skipped-step pairs.
    int cutoff_time() const { return plan.timesteps.at(static_cast<std::size_t>(cutoff_index)); }
    // Throws ConfigError on a plan/schedule mismatch or bad cutoff.
    void validate(const NoiseSchedule& s) const;
};

struct GaussianState {
    std::vector<double> mean;
    std::vector<double> cov_diag;

    static GaussianState standard(std::size_t dim);
};

/// x_T rows from the keyed noise slot 0 of `rng`.
Batch initial_noise(std::size_t n, std::size_t dim, const RandomSource& rng);

/// Runs the reverse chain from the given x_T. Noise added on pair k to row i
/// is rng.keyed_normal(i, k + 1, j); no noise is added on the pair ending at 0.
Batch run_sampler(const Denoiser& d, const NoiseSchedule& s, const SamplerConfig& cfg, const Batch& x_T,
                  const RandomSource& rng);

/// run_sampler from initial_noise(n, d.dim(), rng).
Batch sample(const Denoiser& d, const NoiseSchedule& s, const SamplerConfig& cfg, std::size_t n,
             const RandomSource& rng);

/// Ancestral sampling over every timestep T..1.
Batch ddpm_sample(const Denoiser& d, const NoiseSchedule& s, std::size_t n, const RandomSource& rng);
Batch skipped_sample(const Denoiser& d, const NoiseSchedule& s, const StepPlan& plan, std::size_t n,
                     const RandomSource& rng);
Batch ddim_sample(const Denoiser& d, const NoiseSchedule& s, const StepPlan& plan, std::size_t n,
                  const RandomSource& rng);
Batch mixed_sample(const Denoiser& d, const NoiseSchedule& s, const StepPlan& plan, int cutoff_index,
                   std::size_t n, const RandomSource& rng);
Batch naive_subset_sample(const Denoiser& d, const NoiseSchedule& s, const StepPlan& plan, std::size_t n,
                          const RandomSource& rng);

/// Exact output marginal of the sampler in `cfg` when the denoiser is affine.
/// Starts from N(0, I). Throws UnsupportedError for non-affine denoisers.
GaussianState propagate_affine(const Denoiser& d, const NoiseSchedule& s, const SamplerConfig& cfg);

/// Propagates `initial` through the reverse pairs of an arbitrary strictly
/// decreasing timestep segment. `first_pair` is the plan index of the
/// segment's first pair (it decides the mixed-sampler switch).
GaussianState propagate_affine(const Denoiser& d, const NoiseSchedule& s, SamplerKind kind,
                               std::span<const int> timesteps, const GaussianState& initial,
                               int cutoff_index = 0, int first_pair = 0);

}  // namespace skipstep
