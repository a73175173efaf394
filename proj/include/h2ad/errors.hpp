#pragma once

#include <stdexcept>
#include <string>

namespace h2ad {

// Angle outside (-90, 90) degrees, or a bound evaluated at endfire.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class IndexError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Root-MUSIC could not produce a usable root; the harness records the trial as a failure.
class EstimationFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class VersionError : public FormatError {
public:
    using FormatError::FormatError;
};

}  // namespace h2ad
