#include "skipstep/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "skipstep/errors.hpp"

namespace skipstep {

using nlohmann::json;

NoiseSchedule ScheduleConfig::build() const {
    if (kind == "linear") return make_linear_schedule(T, beta_start, beta_end);
    if (kind == "cosine") return make_cosine_schedule(T, cosine_offset);
    throw ConfigError("schedule.kind: unknown schedule '" + kind + "' (expected linear|cosine)");
}

std::vector<int> ExperimentConfig::budgets() const {
    std::vector<int> out = bench.budgets;
    if (out.empty()) {
        for (int b : {1000, 500, 100, 50, 25}) {
            const int scaled = std::max(1, static_cast<int>(std::lround(b * schedule.T / 1000.0)));
            if (std::find(out.begin(), out.end(), scaled) == out.end()) out.push_back(scaled);
        }
    }
    for (int b : out)
        if (b < 1 || b > schedule.T)
            throw ConfigError("bench.budgets: " + std::to_string(b) + " outside [1, T=" + std::to_string(schedule.T) + "]");
    return out;
}

StepPlan ExperimentConfig::plan_for(int steps) const {
    if (sampler.scheme == PlanScheme::explicit_list) return make_explicit_plan(sampler.timesteps);
    return make_plan(schedule.T, steps, sampler.scheme);
}

int ExperimentConfig::cutoff_for(const StepPlan& plan) const {
    if (sampler.cutoff_index) return *sampler.cutoff_index;
    const int t_c = sampler.cutoff_time >= 0 ? sampler.cutoff_time
                                             : static_cast<int>(std::lround(0.3 * schedule.T));
    return cutoff_index_for_time(plan, t_c);
}

namespace {

class Reader {
public:
    Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) throw ConfigError(where() + ": expected an object");
    }

    template <typename T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        const auto it = node_.find(key);
        if (it == node_.end() || it->is_null()) return;
        try {
            out = it->template get<T>();
        } catch (const json::exception&) {
            throw ConfigError(field(key) + ": wrong type (got " + it->dump() + ")");
        }
    }

    template <typename T>
    void get(const char* key, std::optional<T>& out) {
        seen_.insert(key);
        const auto it = node_.find(key);
        if (it == node_.end() || it->is_null()) return;
        T value{};
        get(key, value);
        out = value;
    }

    template <typename T, typename Parse>
    void get_enum(const char* key, T& out, Parse parse) {
        std::string name;
        get(key, name);
        if (name.empty()) return;
        try {
            out = parse(name);
        } catch (const ConfigError& e) {
            throw ConfigError(field(key) + ": " + e.what());
        }
    }

    const json* child(const char* key) {
        seen_.insert(key);
        const auto it = node_.find(key);
        return it == node_.end() || it->is_null() ? nullptr : &*it;
    }

    void finish() const {
        for (const auto& [key, value] : node_.items())
            if (!seen_.contains(key)) throw ConfigError(field(key.c_str()) + ": unknown key");
    }

    std::string field(const char* key) const { return "field '" + (path_.empty() ? "" : path_ + ".") + key + "'"; }

private:
    std::string where() const { return path_.empty() ? "config" : "field '" + path_ + "'"; }

    const json& node_;
    std::string path_;
    std::set<std::string> seen_;
};

template <typename Fn>
void section(Reader& parent, const char* key, Fn fn) {
    if (const json* node = parent.child(key)) {
        Reader r(*node, key);
        fn(r);
        r.finish();
    }
}

// Re-throws ConfigErrors from validation with the section name attached.
template <typename Fn>
void validated(const char* section_name, Fn fn) {
    try {
        fn();
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        if (msg.find(section_name) != std::string::npos) throw;
        throw ConfigError(std::string(section_name) + ": " + msg);
    }
}

}  // namespace

ExperimentConfig parse_config(const json& tree) {
    ExperimentConfig cfg;
    Reader root(tree, "");

    section(root, "schedule", [&](Reader& r) {
        r.get("kind", cfg.schedule.kind);
        r.get("T", cfg.schedule.T);
        r.get("beta_start", cfg.schedule.beta_start);
        r.get("beta_end", cfg.schedule.beta_end);
        r.get("cosine_offset", cfg.schedule.cosine_offset);
    });

    section(root, "dataset", [&](Reader& r) {
        r.get_enum("kind", cfg.dataset.kind, parse_dataset_kind);
        r.get("n", cfg.dataset.n);
        r.get("seed", cfg.dataset.seed);
        r.get("mean", cfg.dataset.mean);
        r.get("var", cfg.dataset.var);
        r.get("means", cfg.dataset.means);
        r.get("vars", cfg.dataset.vars);
        r.get("weights", cfg.dataset.weights);
        r.get("noise", cfg.dataset.noise);
    });

    section(root, "denoiser", [&](Reader& r) {
        std::string source;
        r.get("source", source);
        if (source == "oracle") cfg.denoiser.source = DenoiserSource::oracle;
        else if (source == "checkpoint") cfg.denoiser.source = DenoiserSource::checkpoint;
        else if (source == "train") cfg.denoiser.source = DenoiserSource::train;
        else if (!source.empty())
            throw ConfigError(r.field("source") + ": unknown source '" + source + "' (expected oracle|checkpoint|train)");
        std::string ckpt;
        r.get("checkpoint", ckpt);
        cfg.denoiser.checkpoint = ckpt;
        r.get("hidden", cfg.denoiser.hidden);
        r.get("embed_dim", cfg.denoiser.embed_dim);
        r.get("init_seed", cfg.denoiser.init_seed);
    });

    section(root, "train", [&](Reader& r) {
        r.get("steps", cfg.train.steps);
        r.get("batch_size", cfg.train.batch_size);
        r.get("learning_rate", cfg.train.learning_rate);
        r.get("momentum", cfg.train.momentum);
        r.get_enum("loss", cfg.train.loss, parse_loss_mode);
        r.get("seed", cfg.train.seed);
    });

    section(root, "sampler", [&](Reader& r) {
        r.get_enum("kind", cfg.sampler.kind, parse_sampler_kind);
        r.get("steps", cfg.sampler.steps);
        r.get_enum("scheme", cfg.sampler.scheme, parse_plan_scheme);
        r.get("timesteps", cfg.sampler.timesteps);
        r.get("cutoff_index", cfg.sampler.cutoff_index);
        r.get("cutoff_time", cfg.sampler.cutoff_time);
        r.get("n", cfg.sampler.n);
        r.get("seed", cfg.sampler.seed);
        r.get("scatter_svg", cfg.sampler.scatter_svg);
        r.get("workers", cfg.sampler.workers);
    });

    section(root, "bench", [&](Reader& r) {
        std::vector<std::string> samplers;
        r.get("samplers", samplers);
        if (!samplers.empty()) {
            cfg.bench.samplers.clear();
            for (const auto& name : samplers) {
                try {
                    cfg.bench.samplers.push_back(parse_sampler_kind(name));
                } catch (const ConfigError& e) {
                    throw ConfigError(r.field("samplers") + ": " + e.what());
                }
            }
        }
        r.get("budgets", cfg.bench.budgets);
        r.get("seeds", cfg.bench.seeds);
        r.get("samples", cfg.bench.samples);
        r.get("metrics", cfg.bench.metrics);
        r.get("cutoff_grid", cfg.bench.cutoff_grid);
        r.get("ablation_budget", cfg.bench.ablation_budget);
        r.get("n_proj", cfg.bench.n_proj);
        r.get("mmd_bandwidth", cfg.bench.mmd_bandwidth);
        r.get("reference_seed", cfg.bench.reference_seed);
        r.get("workers", cfg.bench.workers);
    });
    root.finish();

    validated("schedule", [&] { (void)cfg.schedule.build(); });
    validated("dataset", [&] { cfg.dataset.validate(); });
    validated("train", [&] { cfg.train.validate(); });
    if (cfg.denoiser.embed_dim % 2 != 0) throw ConfigError("field 'denoiser.embed_dim': must be even");
    for (std::size_t h : cfg.denoiser.hidden)
        if (h == 0) throw ConfigError("field 'denoiser.hidden': widths must be positive");
    if (cfg.sampler.steps < 1) throw ConfigError("field 'sampler.steps': must be >= 1");
    if (cfg.sampler.n < 1) throw ConfigError("field 'sampler.n': must be >= 1");
    if (cfg.sampler.workers < 1) throw ConfigError("field 'sampler.workers': must be >= 1");
    if (cfg.bench.samplers.empty()) throw ConfigError("field 'bench.samplers': must not be empty");
    if (cfg.bench.seeds.empty()) throw ConfigError("field 'bench.seeds': must not be empty");
    if (cfg.bench.samples < 2) throw ConfigError("field 'bench.samples': must be >= 2");
    if (cfg.bench.n_proj < 1) throw ConfigError("field 'bench.n_proj': must be >= 1");
    if (cfg.bench.workers < 1) throw ConfigError("field 'bench.workers': must be >= 1");
    static const std::set<std::string> known_metrics{"sliced_w", "energy", "mmd", "moment_w2", "exact_w2"};
    for (const auto& m : cfg.bench.metrics)
        if (!known_metrics.contains(m)) throw ConfigError("field 'bench.metrics': unknown metric '" + m + "'");
    if (cfg.bench.ablation_budget < 1) throw ConfigError("field 'bench.ablation_budget': must be >= 1");
    (void)cfg.budgets();
    return cfg;
}

json load_config_tree(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return json::parse(buf.str(), nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
}

void apply_override(json& tree, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("override '" + assignment + "' must look like key.path=value");
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(text);
    } catch (const json::parse_error&) {
        value = text;
    }
    json* node = &tree;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ConfigError("override '" + assignment + "' has an empty key segment");
        if (!node->is_object()) {
            if (!node->is_null()) throw ConfigError("override '" + assignment + "': '" + part + "' is not inside an object");
            *node = json::object();
        }
        if (dot == std::string::npos) {
            (*node)[part] = value;
            return;
        }
        node = &(*node)[part];
        start = dot + 1;
    }
}

}  // namespace skipstep
