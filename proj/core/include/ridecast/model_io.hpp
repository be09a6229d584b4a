#pragma once

#include <iosfwd>

#include "ridecast/gbt.hpp"

namespace ridecast {

/// On-disk model format identifier and version. Bump the version on any
/// incompatible change to the JSON layout.
inline constexpr const char* kModelFormat = "ridecast.gbt";
inline constexpr int kModelFormatVersion = 1;

/// Serializes the ensemble as JSON. Doubles survive a save/load cycle
/// bit-exactly. Output is deterministic for a given model.
void save_model_json(std::ostream& out, const Ensemble& model);

/// Parses and validates a model written by save_model_json. Structural
/// problems (bad indices, unreachable nodes, non-positive or
/// inconsistent covers) throw ParseError naming the offending node.
Ensemble load_model_json(std::istream& in);

}  // namespace ridecast
