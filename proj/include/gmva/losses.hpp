#pragma once

// Training objectives: cross-entropy matching loss over all valid pairs
// and a margin contrastive loss against the hardest negative per row,
// plus the window accuracy metric.

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gmva/autodiff.hpp"
#include "gmva/fusion.hpp"
#include "gmva/trajectory.hpp"

namespace gmva {

struct GroundTruth {
  std::vector<std::pair<std::string, std::string>> pairs;  // (id_A, id_B)

  bool contains(const std::string& a, const std::string& b) const {
    for (const auto& [pa, pb] : pairs)
      if (pa == a && pb == b) return true;
    return false;
  }

  void check_one_to_one() const {
    std::set<std::string> as, bs;
    for (const auto& [a, b] : pairs) {
      if (!as.insert(a).second || !bs.insert(b).second)
        throw std::invalid_argument("GroundTruth: id appears in more than one pair");
    }
  }
};

// Binary truth matrix aligned with a similarity computation's valid rows
// and columns.
inline Tensor truth_matrix(const GroundTruth& truth, const ObservationSet& obs_a,
                           const ObservationSet& obs_b, const std::vector<int>& row_targets,
                           const std::vector<int>& col_targets) {
  Tensor t(static_cast<int>(row_targets.size()), static_cast<int>(col_targets.size()));
  for (std::size_t r = 0; r < row_targets.size(); ++r)
    for (std::size_t c = 0; c < col_targets.size(); ++c)
      if (truth.contains(obs_a.ids[row_targets[r]], obs_b.ids[col_targets[c]]))
        t.at(static_cast<int>(r), static_cast<int>(c)) = 1.0;
  return t;
}

// -(1/N) sum [T log S + (1-T) log(1-S)] over every included pair, with S
// clamped to [1e-7, 1-1e-7].
inline Value matching_loss(const Value& s, const Tensor& t) {
  if (!s.defined() || s.tensor().numel() == 0)
    throw std::invalid_argument("matching_loss: no valid pairs");
  if (!s.tensor().same_shape(t))
    throw std::invalid_argument("matching_loss: score/truth shape mismatch");
  const double eps = 1e-7;
  Value sc = clamp(s, eps, 1.0 - eps);
  Tensor one_minus_t = t;
  for (double& v : one_minus_t.data) v = 1.0 - v;
  Value pos = mul(Value::constant(t), log_(sc));
  Value neg = mul(Value::constant(std::move(one_minus_t)), log_(add_const(scale(sc, -1.0), 1.0)));
  const double n = static_cast<double>(s.tensor().numel());
  return scale(sum_all(add(pos, neg)), -1.0 / n);
}

// (1/N_p) sum over positive pairs of max(0, m - S_ij + S_ie) with S_ie the
// hardest negative in row i. Rows without negatives contribute zero. The
// literal flag flips the sign convention to max(0, m + S_ij - S_ie).
inline Value contrastive_loss(const Value& s, const Tensor& t, double margin,
                              bool literal_form = false) {
  if (!s.defined() || s.tensor().numel() == 0)
    throw std::invalid_argument("contrastive_loss: empty score matrix");
  if (!s.tensor().same_shape(t))
    throw std::invalid_argument("contrastive_loss: score/truth shape mismatch");
  const int m = s.rows(), n = s.cols();
  const Tensor& sv = s.tensor();

  struct Active {
    int i, j, e;  // positive (i,j) against hardest negative (i,e)
  };
  std::vector<Active> active;
  int n_pos = 0;
  double total = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      if (t.at(i, j) != 1.0) continue;
      ++n_pos;
      int e = -1;
      for (int c = 0; c < n; ++c) {
        if (t.at(i, c) == 1.0) continue;
        if (e < 0 || sv.at(i, c) > sv.at(i, e)) e = c;
      }
      if (e < 0) continue;  // no negative in this row
      double h = literal_form ? margin + sv.at(i, j) - sv.at(i, e)
                              : margin - sv.at(i, j) + sv.at(i, e);
      if (h > 0.0) {
        total += h;
        active.push_back({i, j, e});
      }
    }
  if (n_pos == 0) throw std::invalid_argument("contrastive_loss: no positive pairs");
  total /= n_pos;

  return make_custom_op(
      Tensor::scalar(total), {s},
      [active, n_pos, literal_form](detail::ValueNode& nd) {
        if (!nd.parents[0]->requires_grad) return;
        Tensor& g = nd.parents[0]->ensure_grad();
        const double go = nd.grad.data[0] / n_pos;
        const double sign = literal_form ? 1.0 : -1.0;
        const int cols = g.cols();
        for (const auto& a : active) {
          g.data[static_cast<std::size_t>(a.i) * cols + a.j] += sign * go;
          g.data[static_cast<std::size_t>(a.i) * cols + a.e] -= sign * go;
        }
      });
}

// gamma1 * matching + gamma2 * contrastive. The contrastive term is
// skipped when gamma2 is zero or the window has no positive pair.
inline Value total_loss(const Value& s, const Tensor& t, double gamma1, double gamma2,
                        double margin, bool literal_form = false) {
  Value lm = scale(matching_loss(s, t), gamma1);
  bool has_pos = false;
  for (double v : t.data) has_pos = has_pos || v == 1.0;
  if (gamma2 == 0.0 || !has_pos) return lm;
  return add(lm, scale(contrastive_loss(s, t, margin, literal_form), gamma2));
}

// |pred intersect truth| / |truth| * 100, over (id_A, id_B) pairs.
inline double accuracy(const MatchingMatrix& pred, const ObservationSet& obs_a,
                       const ObservationSet& obs_b, const GroundTruth& truth) {
  if (truth.pairs.empty()) throw std::invalid_argument("accuracy: empty ground truth");
  int hit = 0;
  for (const auto& [i, j] : pred.pairs)
    if (truth.contains(obs_a.ids[i], obs_b.ids[j])) ++hit;
  return 100.0 * hit / static_cast<double>(truth.pairs.size());
}

}  // namespace gmva
