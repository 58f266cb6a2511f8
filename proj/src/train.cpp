#include "skipstep/train.hpp"

#include <cmath>
#include <string>

#include "skipstep/errors.hpp"
#include "skipstep/forward.hpp"

namespace skipstep {

LossMode parse_loss_mode(std::string_view name) {
    if (name == "simple") return LossMode::simple;
    if (name == "weighted") return LossMode::weighted;
    throw ConfigError("unknown loss mode '" + std::string(name) + "' (expected simple|weighted)");
}

std::string_view to_string(LossMode mode) { return mode == LossMode::simple ? "simple" : "weighted"; }

void TrainConfig::validate() const {
    if (steps < 0) throw ConfigError("train.steps must be >= 0");
    if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate must be > 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("train.momentum must be in [0, 1)");
}

double skip_loss_weight(const NoiseSchedule& s, int t, int m) {
    const SkipCoefficients c = skip_coefficients(s, t, m);
    const double ab_t = s.alpha_bar(t);
    const double ab_p = s.alpha_bar(t - m);
    const double sigma2 = c.post_var > 0.0 ? c.post_var : c.fwd_var;
    const double gap = ab_p - ab_t;
    return gap * gap / (2.0 * sigma2 * ab_t * ab_p * (1.0 - ab_t));
}

std::vector<double> train(MlpDenoiser& model, const Batch& data, const TrainConfig& cfg,
                          const NoiseSchedule& s, RandomSource& rng) {
    cfg.validate();
    if (data.rows() == 0) throw ConfigError("train: dataset is empty");
    if (data.cols() != model.dim()) throw ConfigError("train: dataset dimension does not match model");
    if (model.timesteps() != s.T()) throw ConfigError("train: model and schedule disagree on T");

    const auto batch = static_cast<std::size_t>(cfg.batch_size);
    std::vector<double> params = model.parameters();
    std::vector<double> velocity(params.size(), 0.0);
    std::vector<double> grad;
    std::vector<int> ts(batch);
    std::vector<double> weights(batch, 1.0);
    std::vector<double> trace;
    trace.reserve(static_cast<std::size_t>(cfg.steps));

    Batch x0(batch, data.cols());
    for (int step = 0; step < cfg.steps; ++step) {
        for (std::size_t r = 0; r < batch; ++r) {
            const auto pick = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(data.rows()) - 1));
            for (std::size_t j = 0; j < data.cols(); ++j) x0(r, j) = data(pick, j);
            const int t = static_cast<int>(rng.uniform_int(1, s.T()));
            const int m = static_cast<int>(rng.uniform_int(1, std::max(1, t - 1)));
            ts[r] = t;
            weights[r] = cfg.loss == LossMode::simple ? 1.0 : skip_loss_weight(s, t, m);
        }
        const Diffused d = diffuse_from_x0(x0, ts, s, rng);
        const double value = model.loss(d.x_t, ts, d.eps, weights, &grad);
        if (!std::isfinite(value))
            throw TrainingDiverged("training loss became non-finite at step " + std::to_string(step) +
                                   " (learning_rate " + std::to_string(cfg.learning_rate) + ")");
        trace.push_back(value);
        for (std::size_t i = 0; i < params.size(); ++i) {
            velocity[i] = cfg.momentum * velocity[i] - cfg.learning_rate * grad[i];
            params[i] += velocity[i];
        }
        model.set_parameters(params);
    }
    return trace;
}

}  // namespace skipstep
