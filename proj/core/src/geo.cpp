#include "ridecast/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ridecast {

double haversine_gcd(double lat1_deg, double lon1_deg, double lat2_deg, double lon2_deg) {
  constexpr double kDegToRad = std::numbers::pi / 180.0;
  const double phi1 = lat1_deg * kDegToRad;
  const double phi2 = lat2_deg * kDegToRad;
  const double dphi = (lat2_deg - lat1_deg) * kDegToRad;
  const double dlam = (lon2_deg - lon1_deg) * kDegToRad;

  const double sin_dphi = std::sin(dphi / 2.0);
  const double sin_dlam = std::sin(dlam / 2.0);
  const double a = sin_dphi * sin_dphi + std::cos(phi1) * std::cos(phi2) * sin_dlam * sin_dlam;
  const double c = 2.0 * std::asin(std::min(1.0, std::sqrt(a)));
  return kEarthRadiusMiles * c;
}

}  // namespace ridecast
