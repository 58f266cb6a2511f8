#pragma once

#include <span>

#include "skipstep/batch.hpp"
#include "skipstep/random.hpp"
#include "skipstep/schedule.hpp"

namespace skipstep {

struct Diffused {
    Batch x_t;
    Batch eps;
};

/// x_t = sqrt(ab_t) x0 + sqrt(1 - ab_t) eps, eps ~ N(0, I) drawn row by row from `rng`.
Diffused diffuse_from_x0(const Batch& x0, int t, const NoiseSchedule& s, RandomSource& rng);

/// Per-row timesteps; `t[i]` applies to row i.
Diffused diffuse_from_x0(const Batch& x0, std::span<const int> t, const NoiseSchedule& s,
                         RandomSource& rng);

/// Sample q(x_t | x_{t-m}) given a batch at timestep t - m.
Batch diffuse_skip(const Batch& x_prev, int t, int m, const NoiseSchedule& s, RandomSource& rng);

/// Sample q(x_{t-m} | x_t, x_0).
Batch posterior_sample(const Batch& x_t, const Batch& x0, int t, int m, const NoiseSchedule& s,
                       RandomSource& rng);

}  // namespace skipstep
