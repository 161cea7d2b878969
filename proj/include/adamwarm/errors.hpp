#pragma once

#include <stdexcept>
#include <string>

namespace adamwarm {

/// Argument outside the documented domain (non-positive tau, beta2 not in (0,1), ...).
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Vectors that must have matching lengths do not.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A combination of individually valid settings that is not allowed together.
class InvalidConfiguration : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A statistic is mathematically undefined for the given sample
/// (zero variance for a correlation, zero mean for a coefficient of variation).
class UndefinedStatistic : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Non-finite loss or gradient during training.
class NumericFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace adamwarm
