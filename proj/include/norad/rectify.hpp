#pragma once

#include <cstdint>
#include <vector>

#include "norad/atn.hpp"
#include "norad/tensor.hpp"

namespace norad {

/// Post-training refinement of selected rows of the deterministic
/// representation by plain gradient ascent on the attribute log-likelihood.
struct RectifyConfig {
  double epsilon = 0.001;
  std::size_t iterations = 50;
  std::vector<std::uint32_t> targets;  // typically the isolated training nodes
  /// Keep the inactive (zero) coordinates of each row pinned at zero.
  bool preserve_mask = false;

  void validate() const;
};

struct NodeRectifyTrace {
  std::uint32_t node = 0;
  /// Log-likelihood before each step plus one final entry (iterations + 1).
  std::vector<double> ll;
  bool aborted = false;  // non-finite encountered; row left at its pre-state
};

struct RectifyResult {
  Tensor z;
  std::vector<NodeRectifyTrace> traces;
};

/// Updates each target row i by `iterations` steps of
/// z_i += epsilon * grad log p(x_i | z_i); every non-target row of the
/// returned tensor is bitwise identical to the input.
RectifyResult rectify(const Tensor& z, const Tensor& features, const AtnParams& atn,
                      const RectifyConfig& cfg);

}  // namespace norad
