#pragma once

#include <stdexcept>
#include <string>

namespace skipstep {

// Invalid user-supplied parameters or config values. CLI exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Timestep or step-width outside the schedule's range.
struct IndexError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

// File missing, unreadable, or malformed. CLI exit code 3.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Operation not defined for the given argument (e.g. affine propagation
// through a non-affine denoiser).
struct UnsupportedError : std::logic_error {
    using std::logic_error::logic_error;
};

// Training produced a non-finite loss.
struct TrainingDiverged : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace skipstep
