#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "skipstep/batch.hpp"
#include "skipstep/mlp.hpp"
#include "skipstep/random.hpp"
#include "skipstep/schedule.hpp"

namespace skipstep {

enum class LossMode { simple, weighted };

LossMode parse_loss_mode(std::string_view name);
std::string_view to_string(LossMode mode);

struct TrainConfig {
    int steps = 5000;
    int batch_size = 256;
    double learning_rate = 1e-3;
    double momentum = 0.9;
    LossMode loss = LossMode::simple;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Per-draw weight of the m-step eps-matching loss:
///   (ab_{t-m} - ab_t)^2 / (2 sigma^2 ab_t ab_{t-m} (1 - ab_t)),
/// with sigma^2 the m-step posterior variance, or the m-step forward
/// variance when the posterior variance vanishes (t - m = 0).
double skip_loss_weight(const NoiseSchedule& s, int t, int m);

/// Gradient descent with momentum on the eps-matching loss. Each iteration
/// draws a minibatch of rows from `data` (with replacement) and, per row,
/// t ~ U[1, T], m ~ U[1, max(1, t - 1)] and (x_t, eps) ~ q(x_t | x_0).
/// Returns the per-iteration minibatch loss. Throws TrainingDiverged on a
/// non-finite loss.
std::vector<double> train(MlpDenoiser& model, const Batch& data, const TrainConfig& cfg,
                          const NoiseSchedule& s, RandomSource& rng);

}  // namespace skipstep
