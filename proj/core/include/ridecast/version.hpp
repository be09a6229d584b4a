#pragma once

namespace ridecast {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ridecast
