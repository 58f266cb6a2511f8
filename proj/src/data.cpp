#include "skipstep/data.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "skipstep/errors.hpp"
#include "skipstep/random.hpp"

namespace skipstep {

DatasetKind parse_dataset_kind(std::string_view name) {
    if (name == "gaussian") return DatasetKind::gaussian;
    if (name == "gaussian_mixture") return DatasetKind::gaussian_mixture;
    if (name == "two_moons") return DatasetKind::two_moons;
    if (name == "swiss_roll_2d") return DatasetKind::swiss_roll_2d;
    if (name == "checkerboard") return DatasetKind::checkerboard;
    throw ConfigError("unknown dataset kind '" + std::string(name) +
                      "' (expected gaussian|gaussian_mixture|two_moons|swiss_roll_2d|checkerboard)");
}

std::string_view to_string(DatasetKind kind) {
    switch (kind) {
        case DatasetKind::gaussian: return "gaussian";
        case DatasetKind::gaussian_mixture: return "gaussian_mixture";
        case DatasetKind::two_moons: return "two_moons";
        case DatasetKind::swiss_roll_2d: return "swiss_roll_2d";
        case DatasetKind::checkerboard: return "checkerboard";
    }
    return "?";
}

std::size_t DatasetSpec::dim() const {
    switch (kind) {
        case DatasetKind::gaussian: return mean.size();
        case DatasetKind::gaussian_mixture: return means.empty() ? 0 : means.front().size();
        default: return 2;
    }
}

void DatasetSpec::validate() const {
    if (n < 1) throw ConfigError("dataset.n must be >= 1");
    if (kind == DatasetKind::gaussian) {
        if (mean.empty() || mean.size() != var.size())
            throw ConfigError("dataset: gaussian mean/var must be non-empty and equal length");
        for (double v : var)
            if (!(v > 0.0)) throw ConfigError("dataset.var entries must be > 0");
    } else if (kind == DatasetKind::gaussian_mixture) {
        if (means.empty() || means.size() != vars.size() || means.size() != weights.size())
            throw ConfigError("dataset: mixture means/vars/weights must have one entry per component");
        double total = 0.0;
        for (std::size_t k = 0; k < means.size(); ++k) {
            if (means[k].size() != means.front().size() || vars[k].size() != means[k].size() || means[k].empty())
                throw ConfigError("dataset: mixture components must share one dimension");
            for (double v : vars[k])
                if (!(v > 0.0)) throw ConfigError("dataset.vars entries must be > 0");
            if (!(weights[k] > 0.0)) throw ConfigError("dataset.weights entries must be > 0");
            total += weights[k];
        }
        if (std::abs(total - 1.0) > 1e-12) throw ConfigError("dataset.weights must sum to 1");
    } else if (!(noise >= 0.0)) {
        throw ConfigError("dataset.noise must be >= 0");
    }
}

namespace {

std::size_t pick_component(const std::vector<double>& weights, RandomSource& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        acc += weights[k];
        if (u < acc) return k;
    }
    return weights.size() - 1;
}

}  // namespace

std::vector<std::size_t> mixture_components(const DatasetSpec& spec) {
    spec.validate();
    if (spec.kind != DatasetKind::gaussian_mixture) return {};
    RandomSource rng(spec.seed);
    std::vector<std::size_t> comps(spec.n);
    for (std::size_t r = 0; r < spec.n; ++r) {
        comps[r] = pick_component(spec.weights, rng);
        for (std::size_t j = 0; j < spec.dim(); ++j) rng.normal();
    }
    return comps;
}

Batch generate(const DatasetSpec& spec) {
    spec.validate();
    RandomSource rng(spec.seed);
    const std::size_t dim = spec.dim();
    Batch out(spec.n, dim);
    constexpr double pi = std::numbers::pi;
    for (std::size_t r = 0; r < spec.n; ++r) {
        auto row = out.row(r);
        switch (spec.kind) {
            case DatasetKind::gaussian:
                for (std::size_t j = 0; j < dim; ++j) row[j] = spec.mean[j] + std::sqrt(spec.var[j]) * rng.normal();
                break;
            case DatasetKind::gaussian_mixture: {
                const std::size_t k = pick_component(spec.weights, rng);
                for (std::size_t j = 0; j < dim; ++j)
                    row[j] = spec.means[k][j] + std::sqrt(spec.vars[k][j]) * rng.normal();
                break;
            }
            case DatasetKind::two_moons: {
                const double theta = pi * rng.uniform();
                const bool upper = rng.uniform() < 0.5;
                const double x = upper ? std::cos(theta) : 1.0 - std::cos(theta);
                const double y = upper ? std::sin(theta) : 0.5 - std::sin(theta);
                row[0] = x - 0.5 + spec.noise * rng.normal();
                row[1] = y - 0.25 + spec.noise * rng.normal();
                break;
            }
            case DatasetKind::swiss_roll_2d: {
                const double theta = 1.5 * pi * (1.0 + 2.0 * rng.uniform());
                row[0] = theta * std::cos(theta) / 7.0 + spec.noise * rng.normal();
                row[1] = theta * std::sin(theta) / 7.0 + spec.noise * rng.normal();
                break;
            }
            case DatasetKind::checkerboard: {
                const double x = 4.0 * rng.uniform() - 2.0;
                const double lift = rng.uniform() < 0.5 ? -2.0 : 0.0;
                const double y = rng.uniform() + lift + std::fmod(std::floor(x) + 4.0, 2.0);
                row[0] = 0.5 * x;
                row[1] = 0.5 * y;
                break;
            }
        }
    }
    return out;
}

}  // namespace skipstep
