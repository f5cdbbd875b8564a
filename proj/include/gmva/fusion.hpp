#pragma once

// Pairwise feature fusion with uncertainty and the thresholded one-to-one
// matching stage. Each candidate pair (i from stream A, j from stream B)
// gets a joint vector [h_i^A || h_j^B || d_ij || phi_ij]; two MLPs predict
// a mean and a log-variance, and the similarity is
// sigmoid(mu / exp(logvar)). Matching maximizes total similarity under
// one-to-one constraints with scores below tau forbidden.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "gmva/autodiff.hpp"
#include "gmva/hungarian.hpp"
#include "gmva/network.hpp"
#include "gmva/params.hpp"
#include "gmva/trajectory.hpp"

namespace gmva {

constexpr int kGeoFeatures = 3;       // d_ij, |dv|, cos angle
constexpr double kLogvarClamp = 10.0; // exp stays within safe range

// Mask-weighted mean of one target's valid node features; (1 x d).
inline Value pool_target(const NodeFeatures& features, const ObservationSet& obs, int target) {
  const int k = obs.length();
  std::vector<int> rows(k);
  std::vector<std::uint8_t> valid(k);
  bool any = false;
  for (int t = 0; t < k; ++t) {
    rows[t] = features.row(target, t);
    valid[t] = obs.observed(target, t) ? 1 : 0;
    any = any || valid[t];
  }
  if (!any)
    throw std::invalid_argument("pool_target: target " + std::to_string(target) +
                                " has no valid timestep");
  return mean_rows(gather_rows(features.values, rows), valid);
}

// Pooled features for every target with at least one observation.
// Returns the stacked (n_valid x d) matrix and the target indices.
inline std::pair<Value, std::vector<int>> pooled_features(const NodeFeatures& features,
                                                          const ObservationSet& obs) {
  std::vector<int> targets;
  std::vector<Value> rows;
  for (int i = 0; i < obs.num_targets(); ++i) {
    if (!obs.target_has_observation(i)) continue;
    targets.push_back(i);
    rows.push_back(pool_target(features, obs, i));
  }
  if (rows.empty()) return {Value(), {}};
  return {concat_rows(rows), targets};
}

// Spatial proximity and velocity compatibility of a candidate pair:
//   d    = mean distance over co-valid timesteps (mean positions when none)
//   dv   = |mean velocity difference|
//   cos  = cosine of the mean-velocity angle, 0 when either target is
//          essentially stationary
inline std::array<double, kGeoFeatures> geometric_features(const ObservationSet& obs_a,
                                                           const ObservationSet& obs_b, int i,
                                                           int j) {
  const int k = obs_a.length();
  double dist = 0.0;
  int co = 0;
  for (int t = 0; t < k; ++t) {
    if (!obs_a.observed(i, t) || !obs_b.observed(j, t)) continue;
    double dx = obs_a.x(i, t) - obs_b.x(j, t);
    double dy = obs_a.y(i, t) - obs_b.y(j, t);
    dist += std::sqrt(dx * dx + dy * dy);
    ++co;
  }
  if (co > 0) {
    dist /= co;
  } else {
    auto mean_pos = [](const ObservationSet& o, int idx) {
      double sx = 0.0, sy = 0.0;
      int c = 0;
      for (int t = 0; t < o.length(); ++t)
        if (o.observed(idx, t)) {
          sx += o.x(idx, t);
          sy += o.y(idx, t);
          ++c;
        }
      return std::array<double, 2>{sx / c, sy / c};
    };
    auto pa = mean_pos(obs_a, i);
    auto pb = mean_pos(obs_b, j);
    dist = std::hypot(pa[0] - pb[0], pa[1] - pb[1]);
  }

  auto mean_velocity = [](const ObservationSet& o, int idx) {
    double vx = 0.0, vy = 0.0;
    int c = 0;
    int prev = -1;
    for (int t = 0; t < o.length(); ++t) {
      if (!o.observed(idx, t)) continue;
      if (prev >= 0) {
        double dt = static_cast<double>(t - prev);
        vx += (o.x(idx, t) - o.x(idx, prev)) / dt;
        vy += (o.y(idx, t) - o.y(idx, prev)) / dt;
        ++c;
      }
      prev = t;
    }
    if (c > 0) {
      vx /= c;
      vy /= c;
    }
    return std::array<double, 2>{vx, vy};
  };
  auto va = mean_velocity(obs_a, i);
  auto vb = mean_velocity(obs_b, j);
  double dv = std::hypot(va[0] - vb[0], va[1] - vb[1]);
  double sa = std::hypot(va[0], va[1]);
  double sb = std::hypot(vb[0], vb[1]);
  double cosang = 0.0;
  if (sa >= 1e-9 && sb >= 1e-9) cosang = (va[0] * vb[0] + va[1] * vb[1]) / (sa * sb);
  return {dist, dv, cosang};
}

struct UfmScore {
  Value mu;      // (m x 1)
  Value logvar;  // (m x 1), clamped to +-kLogvarClamp before exp
  Value s;       // (m x 1), in (0, 1)
};

namespace detail {

inline Value mlp_128_64_1(const Value& x, ParamStore& params, const std::string& prefix,
                          int in_dim) {
  Value h1 = relu(add_rowvec(matmul(x, params.get(prefix + ".w1", in_dim, 128)),
                             params.get(prefix + ".b1", 1, 128, Init::kZeros)));
  Value h2 = relu(add_rowvec(matmul(h1, params.get(prefix + ".w2", 128, 64)),
                             params.get(prefix + ".b2", 1, 64, Init::kZeros)));
  return add_rowvec(matmul(h2, params.get(prefix + ".w3", 64, 1)),
                    params.get(prefix + ".b3", 1, 1, Init::kZeros));
}

}  // namespace detail

// Uncertainty fusion: separate mean / log-variance MLPs over the joint
// pair features, any number of rows at once.
inline UfmScore ufm_score(const Value& pair_features, ParamStore& params, int d) {
  const int in_dim = 2 * d + kGeoFeatures;
  if (pair_features.cols() != in_dim)
    throw std::invalid_argument("ufm_score: expected " + std::to_string(in_dim) +
                                " columns, got " + std::to_string(pair_features.cols()));
  UfmScore out;
  out.mu = detail::mlp_128_64_1(pair_features, params, "ufm.mu", in_dim);
  out.logvar = detail::mlp_128_64_1(pair_features, params, "ufm.logvar", in_dim);
  Value clamped = clamp(out.logvar, -kLogvarClamp, kLogvarClamp);
  out.s = sigmoid(mul(out.mu, exp_(scale(clamped, -1.0))));
  return out;
}

// Joint feature vector of a single candidate pair, matching the batched
// layout bit for bit; used by the recomputation oracle.
inline Value pair_feature_vector(const Value& pooled_a, int row_a, const Value& pooled_b,
                                 int row_b, const std::array<double, kGeoFeatures>& geo) {
  Tensor g(1, kGeoFeatures);
  for (int c = 0; c < kGeoFeatures; ++c) g.at(0, c) = geo[c];
  return concat_last({gather_rows(pooled_a, {row_a}), gather_rows(pooled_b, {row_b}),
                      Value::constant(std::move(g))});
}

// Dense pairwise similarity over the padded N x N layout; padded rows and
// columns carry score 0 and false validity flags.
struct SimilarityMatrix {
  int n = 0;
  Tensor scores;   // (n x n) in [0, 1]
  Tensor mu;       // (n x n)
  Tensor logvar;   // (n x n)
  std::vector<std::uint8_t> valid_rows, valid_cols;

  bool valid(int i, int j) const { return valid_rows[i] && valid_cols[j]; }
};

// Similarity with the autodiff graph still attached (for training) plus
// the index maps back into the padded observation sets.
struct SimilarityComputation {
  Value score_mat;               // (nA_valid x nB_valid); undefined when either side is empty
  Value mu_mat, logvar_mat;
  std::vector<int> row_targets;  // valid target indices in A
  std::vector<int> col_targets;  // valid target indices in B
  int padded_n = 0;

  bool empty() const { return row_targets.empty() || col_targets.empty(); }

  SimilarityMatrix dense() const {
    SimilarityMatrix m;
    m.n = padded_n;
    m.scores = Tensor(padded_n, padded_n);
    m.mu = Tensor(padded_n, padded_n);
    m.logvar = Tensor(padded_n, padded_n);
    m.valid_rows.assign(padded_n, 0);
    m.valid_cols.assign(padded_n, 0);
    for (int r : row_targets) m.valid_rows[r] = 1;
    for (int c : col_targets) m.valid_cols[c] = 1;
    if (!empty()) {
      const int nb = static_cast<int>(col_targets.size());
      for (std::size_t r = 0; r < row_targets.size(); ++r)
        for (int c = 0; c < nb; ++c) {
          m.scores.at(row_targets[r], col_targets[c]) = score_mat.tensor().at(static_cast<int>(r), c);
          m.mu.at(row_targets[r], col_targets[c]) = mu_mat.tensor().at(static_cast<int>(r), c);
          m.logvar.at(row_targets[r], col_targets[c]) = logvar_mat.tensor().at(static_cast<int>(r), c);
        }
    }
    return m;
  }
};

inline SimilarityComputation similarity_matrix(const NodeFeatures& feat_a,
                                               const NodeFeatures& feat_b,
                                               const ObservationSet& obs_a,
                                               const ObservationSet& obs_b, ParamStore& params,
                                               const NetConfig& cfg) {
  if (obs_a.num_targets() != obs_b.num_targets())
    throw std::invalid_argument("similarity_matrix: observation sets must be padded to equal N");
  SimilarityComputation out;
  out.padded_n = obs_a.num_targets();

  auto [pooled_a, targets_a] = pooled_features(feat_a, obs_a);
  auto [pooled_b, targets_b] = pooled_features(feat_b, obs_b);
  out.row_targets = targets_a;
  out.col_targets = targets_b;
  if (out.empty()) return out;

  const int na = static_cast<int>(targets_a.size());
  const int nb = static_cast<int>(targets_b.size());
  std::vector<int> rows_a, rows_b;
  rows_a.reserve(static_cast<std::size_t>(na) * nb);
  rows_b.reserve(static_cast<std::size_t>(na) * nb);
  Tensor geo(na * nb, kGeoFeatures);
  for (int r = 0; r < na; ++r)
    for (int c = 0; c < nb; ++c) {
      rows_a.push_back(r);
      rows_b.push_back(c);
      auto gf = geometric_features(obs_a, obs_b, targets_a[r], targets_b[c]);
      for (int q = 0; q < kGeoFeatures; ++q) geo.at(r * nb + c, q) = gf[q];
    }

  Value x = concat_last({gather_rows(pooled_a, rows_a), gather_rows(pooled_b, rows_b),
                         Value::constant(std::move(geo))});
  UfmScore score = ufm_score(x, params, cfg.d);
  out.score_mat = reshape(score.s, {na, nb});
  out.mu_mat = reshape(score.mu, {na, nb});
  out.logvar_mat = reshape(score.logvar, {na, nb});
  return out;
}

struct MatchingMatrix {
  int n = 0;
  std::vector<std::uint8_t> entries;            // n x n, one-to-one
  std::vector<std::pair<int, int>> pairs;       // matched (row, col) target indices
  std::vector<int> unmatched_a, unmatched_b;    // valid targets left unmatched

  bool matched(int i, int j) const { return entries[static_cast<std::size_t>(i) * n + j] != 0; }
};

// Threshold first (scores below tau become forbidden), then maximize total
// similarity; assignments landing on forbidden entries are dropped.
inline MatchingMatrix match(const SimilarityMatrix& sim, double tau) {
  const double ninf = -std::numeric_limits<double>::infinity();
  MatchingMatrix out;
  out.n = sim.n;
  out.entries.assign(static_cast<std::size_t>(sim.n) * sim.n, 0);

  std::vector<std::vector<double>> scores(sim.n, std::vector<double>(sim.n, ninf));
  for (int i = 0; i < sim.n; ++i)
    for (int j = 0; j < sim.n; ++j)
      if (sim.valid(i, j) && sim.scores.at(i, j) >= tau) scores[i][j] = sim.scores.at(i, j);

  Assignment asg = hungarian(scores, /*maximize=*/true);
  std::vector<std::uint8_t> col_taken(sim.n, 0);
  for (int i = 0; i < sim.n; ++i) {
    int j = asg.row_to_col[i];
    if (j < 0) continue;
    out.entries[static_cast<std::size_t>(i) * sim.n + j] = 1;
    out.pairs.emplace_back(i, j);
    col_taken[j] = 1;
  }
  for (int i = 0; i < sim.n; ++i) {
    if (sim.valid_rows[i] && asg.row_to_col[i] < 0) out.unmatched_a.push_back(i);
    if (sim.valid_cols[i] && !col_taken[i]) out.unmatched_b.push_back(i);
  }
  return out;
}

}  // namespace gmva
