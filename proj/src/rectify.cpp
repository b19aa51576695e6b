#include "norad/rectify.hpp"

#include <cmath>
#include <set>

#include "norad/errors.hpp"

namespace norad {

void RectifyConfig::validate() const {
  if (!(epsilon > 0.0)) throw ContractError("rectify: epsilon must be > 0");
  std::set<std::uint32_t> unique(targets.begin(), targets.end());
  if (unique.size() != targets.size()) throw ContractError("rectify: duplicate target nodes");
}

RectifyResult rectify(const Tensor& z, const Tensor& features, const AtnParams& atn,
                      const RectifyConfig& cfg) {
  cfg.validate();
  const std::size_t n = z.rows();
  const std::size_t k = z.cols();
  const std::size_t d = features.cols();
  if (features.rows() != n) throw DimensionError("rectify: z and features row mismatch");
  if (atn.t.rows() != k) throw DimensionError("rectify: representation width mismatch");

  RectifyResult result;
  result.z = z;
  Tensor z_row({k});
  Tensor x_row({d});
  for (std::uint32_t node : cfg.targets) {
    if (node >= n) {
      throw IndexError("rectify: node " + std::to_string(node) + " out of range for n=" +
                       std::to_string(n));
    }
    for (std::size_t j = 0; j < k; ++j) z_row(j) = result.z(node, j);
    for (std::size_t j = 0; j < d; ++j) x_row(j) = features(node, j);
    const Tensor pre_row = z_row;

    NodeRectifyTrace trace;
    trace.node = node;
    bool ok = true;
    for (std::size_t it = 0; it <= cfg.iterations; ++it) {
      const double ll = attribute_log_likelihood(x_row, attribute_probs(z_row, atn));
      if (!std::isfinite(ll)) {
        ok = false;
        break;
      }
      trace.ll.push_back(ll);
      if (it == cfg.iterations) break;
      Tensor grad = rectification_gradient(z_row, x_row, atn);
      if (!grad.all_finite()) {
        ok = false;
        break;
      }
      for (std::size_t j = 0; j < k; ++j) {
        if (cfg.preserve_mask && pre_row(j) == 0.0) continue;
        z_row(j) += cfg.epsilon * grad(j);
      }
    }
    if (ok) {
      for (std::size_t j = 0; j < k; ++j) result.z(node, j) = z_row(j);
    } else {
      trace.aborted = true;  // row keeps its pre-rectification value
    }
    result.traces.push_back(std::move(trace));
  }
  return result;
}

}  // namespace norad
