#pragma once

#include <stdexcept>
#include <string>

namespace focusfic {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration or call contract (bad lengths, hierarchy violations, bad options).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Input data problems: missing columns, non-numeric cells, responses invalid for a family.
class DataError : public Error {
public:
    using Error::Error;
};

/// Numerical failures: non-convergence, rank deficiency, separation, singular matrices.
class NumericalError : public Error {
public:
    using Error::Error;
};

} // namespace focusfic
