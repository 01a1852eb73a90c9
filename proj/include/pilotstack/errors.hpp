#pragma once

#include <stdexcept>
#include <string>

namespace pilotstack {

// Invalid numeric input to a pure function (out-of-range angle, NaN, bad dt).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// A configuration, track, or spec file that violates its invariants.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Tensor or frame dimensions that do not line up.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Control values outside [-1, 1] where they must be rejected rather than clamped.
class RangeError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

// On-disk data that fails an integrity check (checksum, missing image, bad catalog line).
class CorruptDataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class FingerprintMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Loss or activation became NaN/Inf.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace pilotstack
