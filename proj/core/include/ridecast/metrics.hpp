#pragma once

#include <cstddef>
#include <span>

namespace ridecast {

/// Coefficient of determination, 1 - SS_res / SS_tot. Throws
/// ValidationError when the inputs are empty, differ in length, or the
/// observed values are constant (SS_tot = 0 leaves R^2 undefined).
double r_squared(std::span<const double> y, std::span<const double> yhat);

/// Root mean squared logarithmic error over log1p-transformed values.
/// Negative predictions are clamped to zero before the transform; the
/// clamp count is reported through n_clamped when non-null. Negative
/// observed values throw ValidationError.
double rmsle(std::span<const double> y, std::span<const double> yhat,
             std::size_t* n_clamped = nullptr);

/// Plain root mean squared error.
double rmse(std::span<const double> y, std::span<const double> yhat);

}  // namespace ridecast
