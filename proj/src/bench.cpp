#include "skipstep/bench.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "skipstep/checkpoint.hpp"
#include "skipstep/data.hpp"
#include "skipstep/errors.hpp"
#include "skipstep/io.hpp"
#include "skipstep/mlp.hpp"
#include "skipstep/svg.hpp"
#include "skipstep/train.hpp"

namespace skipstep {

namespace {

constexpr const char* kMetricColumns[] = {"sliced_w", "energy", "mmd", "moment_w2", "exact_w2"};

bool wants(const ExperimentConfig& cfg, const std::string& metric) {
    return std::find(cfg.bench.metrics.begin(), cfg.bench.metrics.end(), metric) != cfg.bench.metrics.end();
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        cells.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
        if (comma == std::string::npos) return cells;
        start = comma + 1;
    }
}

// Appends rows to the CSV strictly in run order, whatever order runs finish in.
class OrderedCsvWriter {
public:
    OrderedCsvWriter(const std::filesystem::path* path, std::size_t total) : pending_(total) {
        if (path == nullptr) return;
        ensure_parent_dir(*path);
        out_.open(*path, std::ios::trunc);
        if (!out_) throw IoError("cannot open " + path->string() + " for writing");
        out_ << kReportCsvHeader << '\n' << std::flush;
    }

    void submit(std::size_t index, const MetricReport& report) {
        std::lock_guard lock(mutex_);
        pending_[index] = report_csv_row(report);
        while (next_ < pending_.size() && pending_[next_]) {
            if (out_.is_open()) out_ << *pending_[next_] << '\n' << std::flush;
            ++next_;
        }
    }

private:
    std::mutex mutex_;
    std::ofstream out_;
    std::vector<std::optional<std::string>> pending_;
    std::size_t next_ = 0;
};

std::vector<MetricReport> run_all(const ExperimentConfig& cfg, const Denoiser& d, const NoiseSchedule& s,
                                  const std::vector<RunSpec>& runs, const std::filesystem::path* csv) {
    const Batch reference = reference_set(cfg);
    std::vector<MetricReport> reports(runs.size());
    OrderedCsvWriter writer(csv, runs.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= runs.size()) return;
            try {
                reports[i] = evaluate_run(d, s, cfg, runs[i], reference);
                writer.submit(i, reports[i]);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = runs.size();
                return;
            }
        }
    };
    const std::size_t workers = std::min<std::size_t>(cfg.bench.workers, std::max<std::size_t>(runs.size(), 1));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
    return reports;
}

}  // namespace

std::string report_csv_row(const MetricReport& r) {
    std::ostringstream row;
    row << r.sampler << ',' << r.steps << ',' << (r.cutoff_index ? std::to_string(*r.cutoff_index) : "") << ','
        << (r.cutoff_time ? std::to_string(*r.cutoff_time) : "") << ',' << r.seed << ',' << (r.ok ? "ok" : "failed");
    for (const char* name : kMetricColumns) {
        row << ',';
        if (const auto it = r.metrics.find(name); it != r.metrics.end()) row << format_double(it->second);
    }
    std::ostringstream wall;
    wall << std::fixed << std::setprecision(3) << r.wall_ms;
    row << ',' << wall.str();
    return row.str();
}

void write_report_csv(const std::vector<MetricReport>& reports, const std::filesystem::path& path) {
    ensure_parent_dir(path);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << kReportCsvHeader << '\n';
    for (const auto& r : reports) out << report_csv_row(r) << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

std::vector<MetricReport> read_report_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != kReportCsvHeader) throw IoError(path.string() + ": bad report header");
    const std::size_t width = split_csv(kReportCsvHeader).size();
    std::vector<MetricReport> reports;
    auto to_int = [&](const std::string& cell, std::size_t row) -> long long {
        try {
            std::size_t used = 0;
            const long long v = std::stoll(cell, &used);
            if (used != cell.size()) throw std::invalid_argument(cell);
            return v;
        } catch (const std::exception&) {
            throw IoError(path.string() + ": row " + std::to_string(row) + ": bad integer '" + cell + "'");
        }
    };
    while (std::getline(in, line)) {
        const std::size_t row = reports.size() + 1;
        const auto cells = split_csv(line);
        if (cells.size() != width) throw IoError(path.string() + ": row " + std::to_string(row) + " has wrong width");
        MetricReport r;
        r.sampler = cells[0];
        try {
            (void)parse_sampler_kind(r.sampler);
        } catch (const ConfigError&) {
            throw IoError(path.string() + ": row " + std::to_string(row) + ": unknown sampler '" + r.sampler + "'");
        }
        r.steps = static_cast<int>(to_int(cells[1], row));
        if (!cells[2].empty()) r.cutoff_index = static_cast<int>(to_int(cells[2], row));
        if (!cells[3].empty()) r.cutoff_time = static_cast<int>(to_int(cells[3], row));
        r.seed = static_cast<std::uint64_t>(to_int(cells[4], row));
        if (cells[5] != "ok" && cells[5] != "failed")
            throw IoError(path.string() + ": row " + std::to_string(row) + ": bad status '" + cells[5] + "'");
        r.ok = cells[5] == "ok";
        for (std::size_t k = 0; k < std::size(kMetricColumns); ++k) {
            const std::string& cell = cells[6 + k];
            if (cell.empty()) continue;
            double v = 0.0;
            try {
                v = std::stod(cell);
            } catch (const std::exception&) {
                if (cell != "nan") throw IoError(path.string() + ": row " + std::to_string(row) + ": bad number");
                v = std::nan("");
            }
            if (r.ok && !(std::isfinite(v) && v >= 0.0))
                throw IoError(path.string() + ": row " + std::to_string(row) + ": metric must be finite and >= 0");
            r.metrics[kMetricColumns[k]] = v;
        }
        try {
            r.wall_ms = std::stod(cells.back());
        } catch (const std::exception&) {
            throw IoError(path.string() + ": row " + std::to_string(row) + ": bad wall_ms");
        }
        reports.push_back(std::move(r));
    }
    return reports;
}

std::unique_ptr<Denoiser> make_denoiser(const ExperimentConfig& cfg, const NoiseSchedule& s,
                                        std::vector<double>* loss_trace) {
    switch (cfg.denoiser.source) {
        case DenoiserSource::oracle:
            if (cfg.dataset.kind != DatasetKind::gaussian)
                throw ConfigError("field 'denoiser.source': oracle denoiser requires dataset.kind = gaussian");
            return std::make_unique<GaussianOracle>(cfg.dataset.mean, cfg.dataset.var, s);
        case DenoiserSource::checkpoint: {
            if (!std::filesystem::exists(cfg.denoiser.checkpoint))
                throw IoError("checkpoint not found: " + cfg.denoiser.checkpoint.string());
            auto model = std::make_unique<MlpDenoiser>(load_checkpoint(cfg.denoiser.checkpoint));
            if (model->timesteps() != s.T()) throw ConfigError("checkpoint T does not match schedule.T");
            if (model->dim() != cfg.dataset.dim()) throw ConfigError("checkpoint dimension does not match dataset");
            return model;
        }
        case DenoiserSource::train:
            return std::make_unique<MlpDenoiser>(train_denoiser(cfg, s, loss_trace));
    }
    throw ConfigError("unknown denoiser source");
}

MlpDenoiser untrained_denoiser(const ExperimentConfig& cfg, const NoiseSchedule& s) {
    std::vector<std::size_t> widths{cfg.dataset.dim()};
    widths.insert(widths.end(), cfg.denoiser.hidden.begin(), cfg.denoiser.hidden.end());
    widths.push_back(cfg.dataset.dim());
    RandomSource init(cfg.denoiser.init_seed, 7);
    return MlpDenoiser(widths, s.T(), cfg.denoiser.embed_dim, init);
}

MlpDenoiser train_denoiser(const ExperimentConfig& cfg, const NoiseSchedule& s, std::vector<double>* loss_trace) {
    MlpDenoiser model = untrained_denoiser(cfg, s);
    RandomSource rng(cfg.train.seed, 3);
    auto trace = train(model, generate(cfg.dataset), cfg.train, s, rng);
    if (loss_trace != nullptr) *loss_trace = std::move(trace);
    return model;
}

Batch reference_set(const ExperimentConfig& cfg) {
    DatasetSpec spec = cfg.dataset;
    spec.n = cfg.bench.samples;
    spec.seed = cfg.bench.reference_seed;
    return generate(spec);
}

MetricReport evaluate_run(const Denoiser& d, const NoiseSchedule& s, const ExperimentConfig& cfg, const RunSpec& run,
                          const Batch& reference, Batch* samples_out) {
    SamplerConfig sc{run.kind, cfg.plan_for(run.steps)};
    sc.workers = cfg.sampler.workers;
    MetricReport report;
    report.sampler = std::string(to_string(run.kind));
    report.steps = sc.plan.steps();
    report.seed = run.seed;
    if (run.kind == SamplerKind::mixed) {
        sc.cutoff_index = run.cutoff_index ? *run.cutoff_index : cfg.cutoff_for(sc.plan);
        sc.validate(s);
        report.cutoff_index = sc.cutoff_index;
        report.cutoff_time = sc.cutoff_time();
    }

    const RandomSource sampler_rng(run.seed, 1);
    const auto start = std::chrono::steady_clock::now();
    Batch samples = sample(d, s, sc, cfg.bench.samples, sampler_rng);
    report.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

    RandomSource metric_rng(run.seed, 2);
    if (wants(cfg, "sliced_w"))
        report.metrics["sliced_w"] = sliced_wasserstein(samples, reference, cfg.bench.n_proj, metric_rng);
    if (wants(cfg, "energy")) report.metrics["energy"] = energy_distance(samples, reference);
    if (wants(cfg, "mmd")) report.metrics["mmd"] = mmd_rbf(samples, reference, cfg.bench.mmd_bandwidth);
    if (wants(cfg, "moment_w2"))
        report.metrics["moment_w2"] = gaussian_w2(batch_moments(samples), batch_moments(reference));
    if (wants(cfg, "exact_w2") && cfg.dataset.kind == DatasetKind::gaussian && d.affine_form(1)) {
        const GaussianState exact = propagate_affine(d, s, sc);
        report.metrics["exact_w2"] = gaussian_w2(exact, GaussianState{cfg.dataset.mean, cfg.dataset.var});
    }
    for (const auto& [name, value] : report.metrics)
        if (!std::isfinite(value)) report.ok = false;
    if (samples_out != nullptr) *samples_out = std::move(samples);
    return report;
}

std::vector<MetricReport> run_sweep(const ExperimentConfig& cfg, const Denoiser& d, const NoiseSchedule& s,
                                    const std::filesystem::path* csv) {
    std::vector<RunSpec> runs;
    for (SamplerKind kind : cfg.bench.samplers)
        for (int budget : cfg.budgets())
            for (std::uint64_t seed : cfg.bench.seeds) runs.push_back(RunSpec{kind, budget, std::nullopt, seed});
    return run_all(cfg, d, s, runs, csv);
}

std::vector<MetricReport> run_sweep(const ExperimentConfig& cfg, const std::filesystem::path* csv) {
    const NoiseSchedule s = cfg.schedule.build();
    const auto d = make_denoiser(cfg, s);
    return run_sweep(cfg, *d, s, csv);
}

std::vector<int> default_cutoff_grid(int K, int count) {
    std::vector<int> grid;
    for (int i = 0; i < count; ++i) {
        const int k = static_cast<int>(std::lround(static_cast<double>(K) * i / std::max(1, count - 1)));
        if (grid.empty() || k != grid.back()) grid.push_back(k);
    }
    return grid;
}

std::vector<MetricReport> run_cutoff_ablation(const ExperimentConfig& cfg, const Denoiser& d, const NoiseSchedule& s,
                                              int budget, const std::vector<int>& cutoff_grid,
                                              const std::filesystem::path* csv, const std::filesystem::path* svg) {
    if (cutoff_grid.empty()) throw ConfigError("field 'bench.cutoff_grid': must not be empty");
    const StepPlan plan = cfg.plan_for(budget);
    for (int k : cutoff_grid)
        if (k < 0 || k > plan.steps())
            throw ConfigError("field 'bench.cutoff_grid': cutoff index " + std::to_string(k) + " outside [0, " +
                              std::to_string(plan.steps()) + "]");
    std::vector<RunSpec> runs;
    for (int k : cutoff_grid)
        for (std::uint64_t seed : cfg.bench.seeds) runs.push_back(RunSpec{SamplerKind::mixed, budget, k, seed});
    auto reports = run_all(cfg, d, s, runs, csv);

    if (svg != nullptr) {
        std::vector<LineSeries> series;
        for (const char* metric : {"sliced_w", "energy"}) {
            if (!wants(cfg, metric)) continue;
            LineSeries line{std::string(metric) + " (mean over seeds)", {}, {}};
            for (int k : cutoff_grid) {
                double sum = 0.0;
                int count = 0;
                for (const auto& r : reports)
                    if (r.cutoff_index == k && r.metrics.contains(metric)) {
                        sum += r.metrics.at(metric);
                        ++count;
                    }
                line.x.push_back(plan.timesteps[static_cast<std::size_t>(k)]);
                line.y.push_back(count ? sum / count : std::nan(""));
            }
            series.push_back(std::move(line));
        }
        write_line_svg(series, *svg, "Mixed sampler cutoff ablation, K = " + std::to_string(plan.steps()),
                       "cutoff time t_c", "metric");
    }
    return reports;
}

void print_summary(const std::vector<MetricReport>& reports, std::ostream& out) {
    struct Acc {
        std::map<std::string, std::pair<double, int>> sums;
        int runs = 0;
        int failed = 0;
    };
    std::vector<std::string> order;
    std::map<std::string, Acc> groups;
    for (const auto& r : reports) {
        std::string key = r.sampler + " K=" + std::to_string(r.steps);
        if (r.cutoff_index) key += " kc=" + std::to_string(*r.cutoff_index) + " (tc=" + std::to_string(*r.cutoff_time) + ")";
        if (!groups.contains(key)) order.push_back(key);
        Acc& acc = groups[key];
        ++acc.runs;
        if (!r.ok) ++acc.failed;
        for (const auto& [name, v] : r.metrics) {
            acc.sums[name].first += v;
            ++acc.sums[name].second;
        }
    }
    out << std::left << std::setw(34) << "run";
    for (const char* m : kMetricColumns) out << std::setw(13) << m;
    out << "seeds\n";
    for (const auto& key : order) {
        const Acc& acc = groups[key];
        out << std::setw(34) << key;
        for (const char* m : kMetricColumns) {
            const auto it = acc.sums.find(m);
            std::ostringstream cell;
            if (it != acc.sums.end()) cell << std::setprecision(5) << it->second.first / it->second.second;
            else cell << "-";
            out << std::setw(13) << cell.str();
        }
        out << acc.runs << (acc.failed ? " (" + std::to_string(acc.failed) + " failed)" : "") << '\n';
    }
}

}  // namespace skipstep
