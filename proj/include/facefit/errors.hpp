#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace facefit {

enum class ErrorCode {
    shape,               // dimension / parameter-block mismatch
    numeric_range,       // non-finite values produced
    domain,              // argument outside its mathematical domain
    empty_surface,       // no covered pixels
    empty_ground_truth,  // no ground-truth edge pixels
    undefined_fraction,  // empty coordinate set
    saturation,          // log argument hit the epsilon clamp
    degenerate_embedding,
    schema,
    unconstrained_fit,
    non_finite_gradient,
    io,
    parse,
    usage,
};

/// Stable snake_case identifier used in machine-readable CLI diagnostics.
std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error
{
public:
    Error(ErrorCode code, const std::string& message) : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Raised when a log argument falls below epsilon. Carries the value the loss
/// takes under the epsilon clamp so callers can opt into the clamped result.
class SaturationError : public Error
{
public:
    SaturationError(const std::string& message, double clamped_value)
        : Error(ErrorCode::saturation, message), clamped_value_(clamped_value)
    {
    }

    double clamped_value() const noexcept { return clamped_value_; }

private:
    double clamped_value_;
};

/// Raised by fitting when a gradient entry is NaN or infinite.
class NonFiniteGradientError : public Error
{
public:
    NonFiniteGradientError(const std::string& message, std::size_t index)
        : Error(ErrorCode::non_finite_gradient, message), index_(index)
    {
    }

    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

[[noreturn]] void throw_shape_error(std::string_view what, std::size_t expected, std::size_t actual);

} // namespace facefit
