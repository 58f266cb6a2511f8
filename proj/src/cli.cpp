#include "skipstep/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "skipstep/bench.hpp"
#include "skipstep/checkpoint.hpp"
#include "skipstep/config.hpp"
#include "skipstep/errors.hpp"
#include "skipstep/io.hpp"
#include "skipstep/mlp.hpp"
#include "skipstep/samplers.hpp"
#include "skipstep/svg.hpp"
#include "skipstep/train.hpp"
#include "skipstep/verify.hpp"

namespace skipstep {

namespace fs = std::filesystem;

namespace {

struct CliOptions {
    std::string config;
    std::vector<std::string> overrides;
    std::string output_dir;
    int verbosity = 0;
    std::string inject_fault;
    std::size_t mc_samples = 20000;
};

void require_steps_within_T(const char* field, int steps, const ExperimentConfig& cfg) {
    if (steps > cfg.schedule.T)
        throw ConfigError(std::string("field '") + field + "': " + std::to_string(steps) + " steps exceed T = " +
                          std::to_string(cfg.schedule.T));
}

ExperimentConfig load(const CliOptions& opts) {
    nlohmann::json tree = opts.config.empty() ? nlohmann::json::object() : load_config_tree(opts.config);
    for (const auto& o : opts.overrides) apply_override(tree, o);
    return parse_config(tree);
}

fs::path output_dir(const CliOptions& opts) {
    fs::path dir = opts.output_dir;
    if (dir.empty()) {
        const char* env = std::getenv(kOutputDirEnv);
        dir = env != nullptr && *env != '\0' ? fs::path(env) : fs::path("skipstep-out");
    }
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    return dir;
}

// Checkpoint paths in configs are resolved against the output directory
// when relative and not present in the working directory.
void resolve_checkpoint(ExperimentConfig& cfg, const fs::path& out_dir) {
    auto& p = cfg.denoiser.checkpoint;
    if (cfg.denoiser.source == DenoiserSource::checkpoint && p.is_relative() && !fs::exists(p) &&
        fs::exists(out_dir / p))
        p = out_dir / p;
}

int cmd_train(const CliOptions& opts, std::ostream& out) {
    ExperimentConfig cfg = load(opts);
    const fs::path dir = output_dir(opts);
    const NoiseSchedule s = cfg.schedule.build();
    std::vector<double> trace;
    const MlpDenoiser model = train_denoiser(cfg, s, &trace);

    const fs::path ckpt = dir / "model.ckpt";
    save_checkpoint(model, ckpt);
    const fs::path trace_path = dir / "loss_trace.csv";
    std::ofstream csv(trace_path, std::ios::trunc);
    if (!csv) throw IoError("cannot open " + trace_path.string());
    csv << "step,loss\n";
    for (std::size_t i = 0; i < trace.size(); ++i) csv << i << ',' << format_double(trace[i]) << '\n';
    if (!csv) throw IoError("failed writing " + trace_path.string());

    if (opts.verbosity > 0 && !trace.empty()) {
        const std::size_t every = std::max<std::size_t>(1, trace.size() / 10);
        for (std::size_t i = 0; i < trace.size(); i += every) out << "step " << i << " loss " << trace[i] << '\n';
    }
    out << "trained " << model.parameter_count() << " parameters for " << cfg.train.steps << " steps ("
        << to_string(cfg.train.loss) << " loss)";
    if (!trace.empty()) out << ", final loss " << trace.back();
    out << "\ncheckpoint: " << ckpt.string() << "\nloss trace: " << trace_path.string() << '\n';
    return kExitOk;
}

int cmd_sample(const CliOptions& opts, std::ostream& out) {
    ExperimentConfig cfg = load(opts);
    const fs::path dir = output_dir(opts);
    resolve_checkpoint(cfg, dir);
    require_steps_within_T("sampler.steps", cfg.sampler.steps, cfg);
    const NoiseSchedule s = cfg.schedule.build();
    SamplerConfig sc{cfg.sampler.kind, cfg.plan_for(cfg.sampler.steps)};
    sc.workers = cfg.sampler.workers;
    if (sc.kind == SamplerKind::mixed) sc.cutoff_index = cfg.cutoff_for(sc.plan);
    sc.validate(s);
    const auto d = make_denoiser(cfg, s);
    const Batch x = sample(*d, s, sc, cfg.sampler.n, RandomSource(cfg.sampler.seed, 1));

    const fs::path csv = dir / "samples.csv";
    write_batch_csv(x, csv);
    out << "sampler " << to_string(sc.kind) << ", " << sc.plan.steps() << " steps";
    if (sc.kind == SamplerKind::mixed) out << ", cutoff index " << sc.cutoff_index << " (t_c = " << sc.cutoff_time() << ")";
    out << "\nsamples: " << csv.string() << " (" << x.rows() << " rows)\n";
    if (cfg.sampler.scatter_svg && x.cols() <= 2) {
        const fs::path svg = dir / "samples.svg";
        DatasetSpec ref = cfg.dataset;
        ref.n = std::min<std::size_t>(cfg.sampler.n, 5000);
        const Batch reference = generate(ref);
        write_scatter_svg(x, svg, std::string(to_string(sc.kind)) + " samples, K = " + std::to_string(sc.plan.steps()),
                          &reference);
        out << "scatter: " << svg.string() << '\n';
    }
    return kExitOk;
}

int cmd_bench(const CliOptions& opts, std::ostream& out) {
    ExperimentConfig cfg = load(opts);
    const fs::path dir = output_dir(opts);
    resolve_checkpoint(cfg, dir);
    const NoiseSchedule s = cfg.schedule.build();
    const auto d = make_denoiser(cfg, s);
    const fs::path csv = dir / "sweep.csv";
    const auto reports = run_sweep(cfg, *d, s, &csv);
    if (opts.verbosity > 0) {
        out << kReportCsvHeader << '\n';
        for (const auto& r : reports) out << report_csv_row(r) << '\n';
    }
    print_summary(reports, out);
    out << "sweep: " << csv.string() << " (" << reports.size() << " rows)\n";
    return kExitOk;
}

int cmd_ablate(const CliOptions& opts, std::ostream& out) {
    ExperimentConfig cfg = load(opts);
    const fs::path dir = output_dir(opts);
    resolve_checkpoint(cfg, dir);
    require_steps_within_T("bench.ablation_budget", cfg.bench.ablation_budget, cfg);
    const NoiseSchedule s = cfg.schedule.build();
    const int K = cfg.plan_for(cfg.bench.ablation_budget).steps();
    const auto grid = cfg.bench.cutoff_grid.empty() ? default_cutoff_grid(K) : cfg.bench.cutoff_grid;
    const auto d = make_denoiser(cfg, s);
    const fs::path csv = dir / "ablation.csv";
    const fs::path svg = dir / "ablation.svg";
    const auto reports = run_cutoff_ablation(cfg, *d, s, cfg.bench.ablation_budget, grid, &csv, &svg);
    if (opts.verbosity > 0) {
        out << kReportCsvHeader << '\n';
        for (const auto& r : reports) out << report_csv_row(r) << '\n';
    }
    print_summary(reports, out);
    out << "ablation: " << csv.string() << "\nplot: " << svg.string() << '\n';
    return kExitOk;
}

int cmd_verify(const CliOptions& opts, std::ostream& out) {
    ExperimentConfig cfg = load(opts);
    const fs::path dir = output_dir(opts);
    VerifyOptions v;
    v.schedule = cfg.schedule;
    v.seed = cfg.sampler.seed;
    v.mc_samples = opts.mc_samples;
    if (opts.inject_fault == "coef") v.corrupt_coefficients = true;
    else if (!opts.inject_fault.empty())
        throw ConfigError("--inject-fault: unknown fault '" + opts.inject_fault + "' (expected coef)");

    std::ofstream report(dir / "verify.txt", std::ios::trunc);
    if (!report) throw IoError("cannot open " + (dir / "verify.txt").string());
    int failed = 0;
    const auto results = run_verification(v, [&](const CheckResult& r) {
        const std::string line = std::string(r.passed ? "PASS " : "FAIL ") + r.name + ": " + r.detail;
        out << line << std::endl;
        report << line << '\n';
        if (!r.passed) ++failed;
    });
    out << results.size() - failed << "/" << results.size() << " checks passed\n";
    report << results.size() - failed << "/" << results.size() << " checks passed\n";
    return failed == 0 ? kExitOk : kExitFailure;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Skipped-step diffusion sampling: train, sample, benchmark, ablate, verify"};
    app.require_subcommand(1);
    CliOptions opts;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", opts.config, "JSON config file (comments allowed)");
        sub->add_option("-s,--set", opts.overrides, "Override a config value, e.g. sampler.steps=50");
        sub->add_option("-o,--out", opts.output_dir,
                        std::string("Output directory (default: $") + kOutputDirEnv + " or ./skipstep-out)");
        sub->add_flag("-v,--verbose", "Print the loss trace (train) or every run row (bench, ablate)");
    };
    CLI::App* train_cmd = app.add_subcommand("train", "Train an MLP denoiser; writes model.ckpt and loss_trace.csv");
    CLI::App* sample_cmd = app.add_subcommand("sample", "Draw samples; writes samples.csv (+ samples.svg)");
    CLI::App* bench_cmd = app.add_subcommand("bench", "Sampler x step-budget x seed sweep; writes sweep.csv");
    CLI::App* ablate_cmd = app.add_subcommand("ablate", "Mixed-sampler cutoff ablation; writes ablation.csv/.svg");
    CLI::App* verify_cmd = app.add_subcommand("verify", "Run the analytic verification suite");
    for (CLI::App* sub : {train_cmd, sample_cmd, bench_cmd, ablate_cmd, verify_cmd}) add_common(sub);
    verify_cmd->add_option("--mc-samples", opts.mc_samples, "Monte-Carlo sample count for moment checks");
    verify_cmd->add_option("--inject-fault", opts.inject_fault, "Test hook: corrupt coefficients ('coef')")
        ->group("");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitConfig;
    }
    // Flags bound to one shared variable get reset by the unused subcommands, so count on the active one.
    for (CLI::App* sub : app.get_subcommands()) opts.verbosity = static_cast<int>(sub->count("--verbose"));

    try {
        if (*train_cmd) return cmd_train(opts, out);
        if (*sample_cmd) return cmd_sample(opts, out);
        if (*bench_cmd) return cmd_bench(opts, out);
        if (*ablate_cmd) return cmd_ablate(opts, out);
        if (*verify_cmd) return cmd_verify(opts, out);
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const IndexError& e) {
        err << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const IoError& e) {
        err << "I/O error: " << e.what() << '\n';
        return kExitIo;
    } catch (const TrainingDiverged& e) {
        err << "training aborted: " << e.what() << '\n';
        return kExitFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitFailure;
}

}  // namespace skipstep
