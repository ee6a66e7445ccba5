#pragma once

#include <stdexcept>
#include <string>

namespace tess {

// Error taxonomy. The CLI maps these onto distinct process exit codes:
// InputError (and subclasses) -> 2, ConfigError -> 3, PipelineError -> 4.

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// malformed dimensions / incompatible grid shapes
struct ShapeError : InputError {
    using InputError::InputError;
};

// values outside the mathematical domain of an operation
struct NumericError : InputError {
    using InputError::InputError;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// inconsistent or missing stage files, broken provenance chain
struct PipelineError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace tess
