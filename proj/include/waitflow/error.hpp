#pragma once

#include <stdexcept>
#include <string>

namespace waitflow {

//! Day index or interval outside the configured range.
class RangeError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

//! Parameter outside its mathematical domain (e.g. non-positive variance).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

//! Input data violates a schema or model invariant.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what, long row = -1)
        : std::runtime_error(row >= 0 ? what + " (row " + std::to_string(row) + ")" : what), row_(row) {}

    long row() const noexcept { return row_; }

private:
    long row_;
};

//! A simulator could not produce a valid draw (rejection cap hit).
class SimulationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

//! Posterior has no data behind it (empty interval, unidentified parameter).
class ImproperPosteriorError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

//! MCMC failed to start or adapt.
class SamplerError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

//! Configuration rejected before any computation.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

} // namespace waitflow
