#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "skipstep/data.hpp"
#include "skipstep/samplers.hpp"
#include "skipstep/schedule.hpp"
#include "skipstep/train.hpp"

namespace skipstep {

struct ScheduleConfig {
    std::string kind = "linear";  // linear | cosine
    int T = 1000;
    double beta_start = 1e-4;
    double beta_end = 0.02;
    double cosine_offset = 0.008;

    NoiseSchedule build() const;
};

enum class DenoiserSource { oracle, checkpoint, train };

struct DenoiserConfig {
    DenoiserSource source = DenoiserSource::oracle;
    std::filesystem::path checkpoint;
    std::vector<std::size_t> hidden{128, 128};
    std::size_t embed_dim = 32;
    std::uint64_t init_seed = 0;
};

struct SamplerSettings {
    SamplerKind kind = SamplerKind::skipped;
    int steps = 25;
    PlanScheme scheme = PlanScheme::uniform;
    std::vector<int> timesteps;  // explicit scheme only
    std::optional<int> cutoff_index;
    // Mixed sampler switch time when cutoff_index is unset; -1 means 0.3 T.
    int cutoff_time = -1;
    std::size_t n = 2000;
    std::uint64_t seed = 0;
    bool scatter_svg = true;
    unsigned workers = 1;
};

struct BenchSettings {
    std::vector<SamplerKind> samplers{SamplerKind::ddpm, SamplerKind::ddim, SamplerKind::skipped, SamplerKind::mixed};
    std::vector<int> budgets;  // empty: {1000, 500, 100, 50, 25} scaled by T / 1000
    std::vector<std::uint64_t> seeds{0, 1, 2};
    std::size_t samples = 2000;
    std::vector<std::string> metrics{"sliced_w", "energy", "mmd", "moment_w2", "exact_w2"};
    std::vector<int> cutoff_grid;  // empty: evenly spaced over [0, K]
    int ablation_budget = 25;
    std::size_t n_proj = 128;
    double mmd_bandwidth = 1.0;
    std::uint64_t reference_seed = 0x5EEDull;
    unsigned workers = 1;
};

struct ExperimentConfig {
    ScheduleConfig schedule;
    DatasetSpec dataset;
    DenoiserConfig denoiser;
    TrainConfig train;
    SamplerSettings sampler;
    BenchSettings bench;

    std::vector<int> budgets() const;
    // Plan for a `steps`-step run under the sampler settings' scheme.
    StepPlan plan_for(int steps) const;
    // Mixed-sampler cutoff index for `plan` under the sampler settings.
    int cutoff_for(const StepPlan& plan) const;
};

/// Parse a JSON config tree (unknown keys rejected). ConfigError messages
/// name the offending dotted field.
ExperimentConfig parse_config(const nlohmann::json& tree);

/// Reads JSON, allowing // and /* */ comments.
nlohmann::json load_config_tree(const std::filesystem::path& path);

/// Applies "a.b.c=value". The value is parsed as JSON when possible and
/// taken as a string otherwise.
void apply_override(nlohmann::json& tree, const std::string& assignment);

}  // namespace skipstep
