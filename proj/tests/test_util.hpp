#pragma once

// Shared test helpers: the central finite-difference gradient oracle and
// small random-tensor builders.

#include <cmath>
#include <functional>
#include <vector>

#include "gmva/autodiff.hpp"
#include "gmva/tensor.hpp"

namespace testutil {

inline gmva::Tensor random_tensor(int rows, int cols, gmva::Rng& rng, double lo = -1.0,
                                  double hi = 1.0) {
  gmva::Tensor t(rows, cols);
  for (double& v : t.data) v = rng.uniform(lo, hi);
  return t;
}

// Central finite differences of a scalar functional against the analytic
// gradients of the given leaves. `build` must reconstruct the graph from
// the leaves' current tensors. Checks every entry unless max_entries caps
// it (entries then subsample deterministically).
inline double max_fd_rel_err(std::vector<gmva::Value>& leaves,
                             const std::function<gmva::Value()>& build, double h = 1e-5,
                             int max_entries_per_leaf = -1) {
  gmva::Value loss = build();
  for (auto& leaf : leaves) leaf.node()->ensure_grad().fill(0.0);
  gmva::backward(loss);

  std::vector<gmva::Tensor> analytic;
  analytic.reserve(leaves.size());
  for (auto& leaf : leaves) analytic.push_back(leaf.node()->ensure_grad());

  double worst = 0.0;
  gmva::Rng pick(12345);
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    gmva::Tensor& t = leaves[li].tensor();
    const std::size_t n = t.data.size();
    std::vector<std::size_t> entries;
    if (max_entries_per_leaf > 0 && n > static_cast<std::size_t>(max_entries_per_leaf)) {
      for (int e = 0; e < max_entries_per_leaf; ++e) entries.push_back(pick.below(n));
    } else {
      for (std::size_t e = 0; e < n; ++e) entries.push_back(e);
    }
    for (std::size_t e : entries) {
      const double saved = t.data[e];
      t.data[e] = saved + h;
      double fp = build().item();
      t.data[e] = saved - h;
      double fm = build().item();
      t.data[e] = saved;
      double fd = (fp - fm) / (2.0 * h);
      double a = analytic[li].data[e];
      double rel = std::abs(a - fd) / std::max({1.0, std::abs(a), std::abs(fd)});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

// Reduces an op output to a scalar through a fixed random projection so
// gradients of every output entry matter.
inline gmva::Value project_to_scalar(const gmva::Value& out, unsigned seed = 7) {
  gmva::Rng rng(seed);
  gmva::Tensor w(out.tensor().shape);
  for (double& v : w.data) v = rng.uniform(-1.0, 1.0);
  return gmva::sum_all(gmva::mul(out, gmva::Value::constant(std::move(w))));
}

}  // namespace testutil
