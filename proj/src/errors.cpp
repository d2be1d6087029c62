#include "facefit/errors.hpp"

namespace facefit {

std::string_view to_string(ErrorCode code)
{
    switch (code)
    {
    case ErrorCode::shape: return "shape";
    case ErrorCode::numeric_range: return "numeric_range";
    case ErrorCode::domain: return "domain";
    case ErrorCode::empty_surface: return "empty_surface";
    case ErrorCode::empty_ground_truth: return "empty_ground_truth";
    case ErrorCode::undefined_fraction: return "undefined_fraction";
    case ErrorCode::saturation: return "saturation";
    case ErrorCode::degenerate_embedding: return "degenerate_embedding";
    case ErrorCode::schema: return "schema";
    case ErrorCode::unconstrained_fit: return "unconstrained_fit";
    case ErrorCode::non_finite_gradient: return "non_finite_gradient";
    case ErrorCode::io: return "io";
    case ErrorCode::parse: return "parse";
    case ErrorCode::usage: return "usage";
    }
    return "unknown";
}

void throw_shape_error(std::string_view what, std::size_t expected, std::size_t actual)
{
    throw Error(ErrorCode::shape, std::string(what) + ": expected size " + std::to_string(expected) + ", got " +
                                      std::to_string(actual));
}

} // namespace facefit
