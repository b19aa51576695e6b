#pragma once

#include <string>

#include <json.hpp>

#include "norad/autodiff.hpp"

namespace norad {

inline constexpr int kCheckpointVersion = 1;

/// Trained model state: every named tensor (weights, blockmodel, cached
/// representations) plus the resolved configuration it was produced with.
struct Checkpoint {
  nlohmann::json config;
  ParameterStore params;
};

/// Writes `manifest_path` (JSON: version, config, parameter names / shapes /
/// byte offsets) and a sibling raw little-endian float64 blob.
void save_checkpoint(const std::string& manifest_path, const Checkpoint& cp);

/// Inverse of save_checkpoint. Throws VersionError on a version mismatch,
/// IoError / ParseError / ConsistencyError on malformed input.
Checkpoint load_checkpoint(const std::string& manifest_path);

}  // namespace norad
