#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace latgas {

// Base class for numerical failures (as opposed to std::invalid_argument,
// which is thrown for violated preconditions).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raised when a subsystem has more sites than the exact enumerator accepts.
class EnumerationCapExceeded : public NumericalError {
public:
    EnumerationCapExceeded(std::size_t sites, std::size_t cap)
        : NumericalError("subsystem has " + std::to_string(sites) +
                         " sites, above the enumeration cap of " + std::to_string(cap) +
                         "; use the sampler"),
          sites_(sites), cap_(cap) {}

    std::size_t sites() const noexcept { return sites_; }
    std::size_t cap() const noexcept { return cap_; }

private:
    std::size_t sites_;
    std::size_t cap_;
};

// Calibration aborted at a specific tenor index.
class CalibrationError : public NumericalError {
public:
    CalibrationError(std::size_t index, const std::string& what)
        : NumericalError("calibration failed at index " + std::to_string(index) + ": " + what),
          index_(index) {}

    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

class OverflowError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace latgas
