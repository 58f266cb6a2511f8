#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "skipstep/batch.hpp"
#include "skipstep/config.hpp"
#include "skipstep/denoiser.hpp"
#include "skipstep/metrics.hpp"
#include "skipstep/mlp.hpp"

namespace skipstep {

/// Run-table CSV header. One row per (sampler, steps, cutoff, seed) run.
/// Metric cells are empty when a metric was not requested or does not apply
/// (exact_w2 needs an affine denoiser and gaussian data); wall_ms, always
/// last, is the only column that varies between identical reruns.
inline constexpr const char* kReportCsvHeader =
    "sampler,steps,cutoff_index,cutoff_time,seed,status,sliced_w,energy,mmd,moment_w2,exact_w2,wall_ms";

std::string report_csv_row(const MetricReport& r);
void write_report_csv(const std::vector<MetricReport>& reports, const std::filesystem::path& path);
// Parses and validates rows written by write_report_csv; throws IoError on schema violations.
std::vector<MetricReport> read_report_csv(const std::filesystem::path& path);

/// Builds the denoiser named by cfg.denoiser. Training (source = train)
/// stores the loss trace in `loss_trace` when given.
std::unique_ptr<Denoiser> make_denoiser(const ExperimentConfig& cfg, const NoiseSchedule& s,
                                        std::vector<double>* loss_trace = nullptr);

/// MLP with the configured widths, initialised from RandomSource(denoiser.init_seed, 7).
MlpDenoiser untrained_denoiser(const ExperimentConfig& cfg, const NoiseSchedule& s);

/// untrained_denoiser trained on generate(dataset) with RandomSource(train.seed, 3).
MlpDenoiser train_denoiser(const ExperimentConfig& cfg, const NoiseSchedule& s,
                           std::vector<double>* loss_trace = nullptr);

/// Reference draw for empirical metrics: the configured dataset with
/// n = bench.samples and seed = bench.reference_seed.
Batch reference_set(const ExperimentConfig& cfg);

struct RunSpec {
    SamplerKind kind = SamplerKind::skipped;
    int steps = 25;
    std::optional<int> cutoff_index;
    std::uint64_t seed = 0;
};

/// Samples bench.samples rows for one run and evaluates the requested
/// metrics against `reference`. Sampler noise uses RandomSource(seed, 1),
/// metric projections RandomSource(seed, 2).
MetricReport evaluate_run(const Denoiser& d, const NoiseSchedule& s, const ExperimentConfig& cfg, const RunSpec& run,
                          const Batch& reference, Batch* samples = nullptr);

/// Every (sampler, budget, seed) triple, in that nesting order. Rows are
/// appended to `csv` (if given) in run order as they complete.
std::vector<MetricReport> run_sweep(const ExperimentConfig& cfg, const Denoiser& d, const NoiseSchedule& s,
                                    const std::filesystem::path* csv = nullptr);
std::vector<MetricReport> run_sweep(const ExperimentConfig& cfg, const std::filesystem::path* csv = nullptr);

/// Mixed sampler at `budget` steps for each cutoff index in `cutoff_grid` and
/// each seed. Writes `csv` and a cutoff-time vs metric SVG at `svg` if given.
std::vector<MetricReport> run_cutoff_ablation(const ExperimentConfig& cfg, const Denoiser& d, const NoiseSchedule& s,
                                              int budget, const std::vector<int>& cutoff_grid,
                                              const std::filesystem::path* csv = nullptr,
                                              const std::filesystem::path* svg = nullptr);

/// Default ablation grid: `count` cutoff indices evenly spread over [0, K].
std::vector<int> default_cutoff_grid(int K, int count = 6);

/// Plain-text summary table: mean of each metric over seeds per (sampler, steps, cutoff).
void print_summary(const std::vector<MetricReport>& reports, std::ostream& out);

}  // namespace skipstep
