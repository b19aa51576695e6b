#pragma once

#include <cstdint>
#include <string_view>

#include "norad/tensor.hpp"

namespace norad {

/// Deterministic random stream. All randomness in the project flows from a
/// single master seed through named streams, so e.g. evaluation draws can
/// never perturb training draws.
class RngStream {
 public:
  explicit RngStream(std::uint64_t state) : state_(state) {}

  std::uint64_t next_u64();

  /// Uniform in the open interval (0, 1).
  double uniform();

  /// Standard normal via Box-Muller (portable, implementation-independent).
  double normal();

  /// Uniform integer in [0, n).
  std::uint64_t uniform_int(std::uint64_t n);

  Tensor uniform_tensor(std::vector<std::size_t> shape);
  Tensor normal_tensor(std::vector<std::size_t> shape);

  /// Glorot-uniform initialization for a fan_in x fan_out weight matrix.
  Tensor glorot_tensor(std::size_t fan_in, std::size_t fan_out);

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Derives an independent stream from (seed, name).
RngStream rng_stream(std::uint64_t seed, std::string_view name);

/// FNV-1a hash, also used for file/config fingerprints.
std::uint64_t fnv1a64(std::string_view data);

}  // namespace norad
