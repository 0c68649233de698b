#pragma once

#include <stdexcept>
#include <string>

namespace phri {

/// Invalid configuration values, malformed specs or config files.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite state or input reached the admittance dynamics; the trial is aborted.
class DynamicsFault : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A trial whose Driving phase has zero duration or zero path length.
class DegenerateTrial : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parse or schema failures for trial logs, manifests and model artifacts.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical fitting failed (e.g. kernel matrix not positive definite).
class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Training diverged (NaN loss).
class TrainingAborted : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace phri
