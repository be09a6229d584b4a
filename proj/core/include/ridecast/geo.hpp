#pragma once

namespace ridecast {

/// Mean Earth radius in miles used for all great-circle distances.
inline constexpr double kEarthRadiusMiles = 3958.8;

/// Haversine great-circle distance in miles between two points given in
/// degrees. Symmetric and nonnegative; numerically stable for nearby
/// points, which is where the trip data lives.
double haversine_gcd(double lat1_deg, double lon1_deg, double lat2_deg, double lon2_deg);

}  // namespace ridecast
