#include "ridecast/metrics.hpp"

#include <cmath>
#include <string>

#include "ridecast/errors.hpp"

namespace ridecast {
namespace {

void check_lengths(std::span<const double> y, std::span<const double> yhat, const char* what) {
  if (y.empty())
    throw ValidationError(std::string(what) + " needs at least one observation");
  if (y.size() != yhat.size())
    throw ValidationError(std::string(what) + ": observed and predicted lengths differ (" +
                          std::to_string(y.size()) + " vs " + std::to_string(yhat.size()) + ")");
}

}  // namespace

double r_squared(std::span<const double> y, std::span<const double> yhat) {
  check_lengths(y, yhat, "r_squared");
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double ss_tot = 0.0, ss_res = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ss_tot += (y[i] - mean) * (y[i] - mean);
    ss_res += (y[i] - yhat[i]) * (y[i] - yhat[i]);
  }
  if (ss_tot == 0.0)
    throw ValidationError("r_squared is undefined for constant observed values");
  return 1.0 - ss_res / ss_tot;
}

double rmsle(std::span<const double> y, std::span<const double> yhat, std::size_t* n_clamped) {
  check_lengths(y, yhat, "rmsle");
  std::size_t clamped = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] < 0.0)
      throw ValidationError("rmsle: observed value " + std::to_string(y[i]) +
                            " at index " + std::to_string(i) + " is negative");
    double p = yhat[i];
    if (p < 0.0) {
      p = 0.0;
      ++clamped;
    }
    double d = std::log1p(p) - std::log1p(y[i]);
    sum += d * d;
  }
  if (n_clamped) *n_clamped = clamped;
  return std::sqrt(sum / static_cast<double>(y.size()));
}

double rmse(std::span<const double> y, std::span<const double> yhat) {
  check_lengths(y, yhat, "rmse");
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    double d = y[i] - yhat[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(y.size()));
}

}  // namespace ridecast
