#pragma once

// Classical trajectory matchers: Euclidean / Chebyshev mean pointwise
// distance, dynamic time warping over the valid sub-sequences, and a
// Gaussian displacement likelihood with a median-displacement bandwidth.
// Each builds a pairwise cost matrix and solves a minimum-cost one-to-one
// assignment.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "gmva/fusion.hpp"
#include "gmva/hungarian.hpp"
#include "gmva/trajectory.hpp"

namespace gmva {

enum class BaselineMethod { ED, CD, DTW, PDF };

inline const char* baseline_name(BaselineMethod m) {
  switch (m) {
    case BaselineMethod::ED: return "ed";
    case BaselineMethod::CD: return "cd";
    case BaselineMethod::DTW: return "dtw";
    case BaselineMethod::PDF: return "pdf";
  }
  return "?";
}

inline BaselineMethod baseline_from_name(const std::string& s) {
  if (s == "ed") return BaselineMethod::ED;
  if (s == "cd") return BaselineMethod::CD;
  if (s == "dtw") return BaselineMethod::DTW;
  if (s == "pdf") return BaselineMethod::PDF;
  throw std::invalid_argument("unknown baseline method: " + s);
}

namespace detail {

inline std::vector<std::array<double, 2>> valid_points(const ObservationSet& o, int i) {
  std::vector<std::array<double, 2>> pts;
  for (int t = 0; t < o.length(); ++t)
    if (o.observed(i, t)) pts.push_back({o.x(i, t), o.y(i, t)});
  return pts;
}

inline std::array<double, 2> mean_point(const ObservationSet& o, int i) {
  double sx = 0.0, sy = 0.0;
  int c = 0;
  for (int t = 0; t < o.length(); ++t)
    if (o.observed(i, t)) {
      sx += o.x(i, t);
      sy += o.y(i, t);
      ++c;
    }
  return {sx / c, sy / c};
}

// Mean pointwise distance over co-valid timesteps; falls back to the
// distance between mean positions when the masks never overlap.
template <typename Dist>
inline double mean_pointwise(const ObservationSet& a, const ObservationSet& b, int i, int j,
                             Dist dist) {
  double acc = 0.0;
  int co = 0;
  for (int t = 0; t < a.length(); ++t) {
    if (!a.observed(i, t) || !b.observed(j, t)) continue;
    acc += dist(a.x(i, t) - b.x(j, t), a.y(i, t) - b.y(j, t));
    ++co;
  }
  if (co > 0) return acc / co;
  auto pa = mean_point(a, i);
  auto pb = mean_point(b, j);
  return dist(pa[0] - pb[0], pa[1] - pb[1]);
}

inline double dtw_cost(const std::vector<std::array<double, 2>>& s,
                       const std::vector<std::array<double, 2>>& q) {
  const std::size_t n = s.size(), m = q.size();
  const double INF = std::numeric_limits<double>::infinity();
  std::vector<double> prev(m + 1, INF), cur(m + 1, INF);
  prev[0] = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    cur.assign(m + 1, INF);
    for (std::size_t j = 1; j <= m; ++j) {
      double c = std::hypot(s[i - 1][0] - q[j - 1][0], s[i - 1][1] - q[j - 1][1]);
      cur[j] = c + std::min({prev[j], cur[j - 1], prev[j - 1]});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

}  // namespace detail

// Pairwise cost matrix over the padded N x N layout; invalid entries are +inf.
inline std::vector<std::vector<double>> baseline_costs(const ObservationSet& obs_a,
                                                       const ObservationSet& obs_b,
                                                       BaselineMethod method) {
  if (obs_a.num_targets() != obs_b.num_targets())
    throw std::invalid_argument("baseline_costs: observation sets must be padded to equal N");
  const int n = obs_a.num_targets();
  const double INF = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> cost(n, std::vector<double>(n, INF));

  std::vector<std::uint8_t> va(n, 0), vb(n, 0);
  for (int i = 0; i < n; ++i) {
    va[i] = obs_a.target_has_observation(i) ? 1 : 0;
    vb[i] = obs_b.target_has_observation(i) ? 1 : 0;
  }

  double bandwidth = 1.0;
  if (method == BaselineMethod::PDF) {
    // median pointwise displacement over all valid pairs
    std::vector<double> disp;
    for (int i = 0; i < n; ++i) {
      if (!va[i]) continue;
      for (int j = 0; j < n; ++j) {
        if (!vb[j]) continue;
        for (int t = 0; t < obs_a.length(); ++t)
          if (obs_a.observed(i, t) && obs_b.observed(j, t))
            disp.push_back(std::hypot(obs_a.x(i, t) - obs_b.x(j, t),
                                      obs_a.y(i, t) - obs_b.y(j, t)));
      }
    }
    if (!disp.empty()) {
      std::size_t mid = disp.size() / 2;
      std::nth_element(disp.begin(), disp.begin() + mid, disp.end());
      bandwidth = disp[mid];
    }
    bandwidth = std::max(bandwidth, 1e-12);
  }

  for (int i = 0; i < n; ++i) {
    if (!va[i]) continue;
    for (int j = 0; j < n; ++j) {
      if (!vb[j]) continue;
      switch (method) {
        case BaselineMethod::ED:
          cost[i][j] = detail::mean_pointwise(obs_a, obs_b, i, j,
                                              [](double dx, double dy) { return std::hypot(dx, dy); });
          break;
        case BaselineMethod::CD:
          cost[i][j] = detail::mean_pointwise(obs_a, obs_b, i, j, [](double dx, double dy) {
            return std::max(std::abs(dx), std::abs(dy));
          });
          break;
        case BaselineMethod::DTW:
          cost[i][j] = detail::dtw_cost(detail::valid_points(obs_a, i), detail::valid_points(obs_b, j));
          break;
        case BaselineMethod::PDF: {
          // mean negative log of N(displacement; 0, sigma^2 I)
          const double s2 = bandwidth * bandwidth;
          const double log_norm = std::log(2.0 * 3.14159265358979323846 * s2);
          double acc = 0.0;
          int co = 0;
          for (int t = 0; t < obs_a.length(); ++t) {
            if (!obs_a.observed(i, t) || !obs_b.observed(j, t)) continue;
            double dx = obs_a.x(i, t) - obs_b.x(j, t);
            double dy = obs_a.y(i, t) - obs_b.y(j, t);
            acc += (dx * dx + dy * dy) / (2.0 * s2) + log_norm;
            ++co;
          }
          if (co > 0) {
            cost[i][j] = acc / co;
          } else {
            auto pa = detail::mean_point(obs_a, i);
            auto pb = detail::mean_point(obs_b, j);
            double r2 = (pa[0] - pb[0]) * (pa[0] - pb[0]) + (pa[1] - pb[1]) * (pa[1] - pb[1]);
            cost[i][j] = r2 / (2.0 * s2) + log_norm;
          }
          // degenerate bandwidths can blow the cost past what the
          // assignment solver accepts
          cost[i][j] = std::min(cost[i][j], 1e9);
          break;
        }
      }
    }
  }
  return cost;
}

inline MatchingMatrix baseline_match(const ObservationSet& obs_a, const ObservationSet& obs_b,
                                     BaselineMethod method) {
  auto cost = baseline_costs(obs_a, obs_b, method);
  const int n = static_cast<int>(cost.size());
  Assignment asg = hungarian(cost, /*maximize=*/false);

  MatchingMatrix out;
  out.n = n;
  out.entries.assign(static_cast<std::size_t>(n) * n, 0);
  std::vector<std::uint8_t> col_taken(n, 0);
  for (int i = 0; i < n; ++i) {
    int j = asg.row_to_col[i];
    if (j < 0) continue;
    out.entries[static_cast<std::size_t>(i) * n + j] = 1;
    out.pairs.emplace_back(i, j);
    col_taken[j] = 1;
  }
  for (int i = 0; i < n; ++i) {
    if (obs_a.target_has_observation(i) && asg.row_to_col[i] < 0) out.unmatched_a.push_back(i);
    if (obs_b.target_has_observation(i) && !col_taken[i]) out.unmatched_b.push_back(i);
  }
  return out;
}

}  // namespace gmva
