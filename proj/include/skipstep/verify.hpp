#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "skipstep/config.hpp"
#include "skipstep/schedule.hpp"

namespace skipstep {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct VerifyOptions {
    // Schedule for the sampler-level checks.
    ScheduleConfig schedule;
    std::uint64_t seed = 0;
    // Monte-Carlo sample count for moment checks.
    std::size_t mc_samples = 20000;
    // Fault injection: perturb the skipped-step coefficients seen by the
    // schedule-level checks by a relative 1e-3.
    bool corrupt_coefficients = false;
};

/// Runs every analytic and Monte-Carlo invariant at small scale. One result
/// per check; `progress`, when set, is called after each check completes.
std::vector<CheckResult> run_verification(const VerifyOptions& opts,
                                          const std::function<void(const CheckResult&)>& progress = {});

}  // namespace skipstep
