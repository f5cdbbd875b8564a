#pragma once

// Trajectory domain types and preprocessing: grid resampling, sliding
// windows with zero padding, least-squares 2-D affine alignment between
// the two sensor coordinate frames, and box normalization.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gmva/tensor.hpp"

namespace gmva {

enum class Modality { A, B };

inline const char* modality_name(Modality m) { return m == Modality::A ? "A" : "B"; }

struct TrackPoint {
  std::int64_t t = 0;  // seconds
  double x = 0.0;
  double y = 0.0;
};

struct RawTrack {
  std::string target_id;
  Modality modality = Modality::A;
  std::vector<TrackPoint> points;  // strictly increasing t
};

struct TimeWindow {
  std::vector<std::int64_t> timestamps;  // equally spaced
  int length() const { return static_cast<int>(timestamps.size()); }
};

// Zero-padded trajectory tensor over one time window. ids entries may be
// empty strings: those rows are pure padding (mask all false).
struct ObservationSet {
  TimeWindow window;
  std::vector<std::string> ids;
  Tensor coords;                    // shape (N, k, 2)
  std::vector<std::uint8_t> mask;   // N * k, true = observed

  int num_targets() const { return static_cast<int>(ids.size()); }
  int length() const { return window.length(); }

  static ObservationSet empty(TimeWindow w, int n_targets) {
    ObservationSet o;
    o.window = std::move(w);
    o.ids.assign(n_targets, "");
    o.coords = Tensor({n_targets, o.window.length(), 2});
    o.mask.assign(static_cast<std::size_t>(n_targets) * o.window.length(), 0);
    return o;
  }

  bool observed(int i, int t) const { return mask[static_cast<std::size_t>(i) * length() + t] != 0; }
  double x(int i, int t) const { return coords.data[(static_cast<std::size_t>(i) * length() + t) * 2]; }
  double y(int i, int t) const { return coords.data[(static_cast<std::size_t>(i) * length() + t) * 2 + 1]; }

  void set(int i, int t, double px, double py) {
    mask[static_cast<std::size_t>(i) * length() + t] = 1;
    coords.data[(static_cast<std::size_t>(i) * length() + t) * 2] = px;
    coords.data[(static_cast<std::size_t>(i) * length() + t) * 2 + 1] = py;
  }

  bool target_has_observation(int i) const {
    for (int t = 0; t < length(); ++t)
      if (observed(i, t)) return true;
    return false;
  }

  int find_id(const std::string& id) const {
    for (int i = 0; i < num_targets(); ++i)
      if (ids[i] == id) return i;
    return -1;
  }
};

struct AffineTransform2D {
  double w[2][2] = {{1.0, 0.0}, {0.0, 1.0}};
  double b[2] = {0.0, 0.0};

  static AffineTransform2D identity() { return {}; }

  std::pair<double, double> apply(double x, double y) const {
    return {w[0][0] * x + w[0][1] * y + b[0], w[1][0] * x + w[1][1] * y + b[1]};
  }

  bool finite() const {
    return std::isfinite(w[0][0]) && std::isfinite(w[0][1]) && std::isfinite(w[1][0]) &&
           std::isfinite(w[1][1]) && std::isfinite(b[0]) && std::isfinite(b[1]);
  }
};

struct Bounds {
  double min_x = 0.0, min_y = 0.0, max_x = 1.0, max_y = 1.0;

  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }

  bool degenerate() const {
    return !(std::isfinite(min_x) && std::isfinite(min_y) && std::isfinite(max_x) &&
             std::isfinite(max_y)) ||
           width() <= 0.0 || height() <= 0.0;
  }

  Bounds expanded(double frac) const {
    Bounds b = *this;
    double dx = width() * frac, dy = height() * frac;
    b.min_x -= dx;
    b.max_x += dx;
    b.min_y -= dy;
    b.max_y += dy;
    return b;
  }

  static Bounds of_tracks(const std::vector<RawTrack>& tracks) {
    Bounds b{1e300, 1e300, -1e300, -1e300};
    bool any = false;
    for (const auto& tr : tracks)
      for (const auto& p : tr.points) {
        any = true;
        b.min_x = std::min(b.min_x, p.x);
        b.min_y = std::min(b.min_y, p.y);
        b.max_x = std::max(b.max_x, p.x);
        b.max_y = std::max(b.max_y, p.y);
      }
    if (!any) return Bounds{};
    return b;
  }
};

namespace detail {

// Not-a-knot cubic spline through (x_i, y_i). Reproduces cubics exactly,
// which natural boundary conditions would not.
class CubicSpline {
 public:
  CubicSpline(const std::vector<double>& xs, const std::vector<double>& ys) : xs_(xs), ys_(ys) {
    const int n = static_cast<int>(xs.size());
    if (n < 4) throw std::logic_error("CubicSpline needs >= 4 points");
    std::vector<double> h(n - 1);
    for (int i = 0; i + 1 < n; ++i) h[i] = xs[i + 1] - xs[i];

    // Solve for second derivatives M_1..M_{n-2}; M_0 and M_{n-1} follow
    // from third-derivative continuity at the first and last interior knot.
    const int m = n - 2;
    std::vector<double> lower(m, 0.0), diag(m, 0.0), upper(m, 0.0), rhs(m, 0.0);
    for (int i = 1; i <= n - 2; ++i) {
      int r = i - 1;
      double d = 6.0 * ((ys[i + 1] - ys[i]) / h[i] - (ys[i] - ys[i - 1]) / h[i - 1]);
      double a = h[i - 1], bmid = 2.0 * (h[i - 1] + h[i]), c = h[i];
      if (i == 1) {
        // M_0 = (1 + h0/h1) M_1 - (h0/h1) M_2
        double r01 = h[0] / h[1];
        diag[r] = bmid + a * (1.0 + r01);
        upper[r] = c - a * r01;
      } else if (i == n - 2) {
        // M_{n-1} = (1 + h_{n-2}/h_{n-3}) M_{n-2} - (h_{n-2}/h_{n-3}) M_{n-3}
        double rr = h[n - 2] / h[n - 3];
        diag[r] = bmid + c * (1.0 + rr);
        lower[r] = a - c * rr;
      } else {
        lower[r] = a;
        diag[r] = bmid;
        upper[r] = c;
      }
      rhs[r] = d;
    }
    // Thomas algorithm
    for (int r = 1; r < m; ++r) {
      double f = lower[r] / diag[r - 1];
      diag[r] -= f * upper[r - 1];
      rhs[r] -= f * rhs[r - 1];
    }
    std::vector<double> sol(m);
    sol[m - 1] = rhs[m - 1] / diag[m - 1];
    for (int r = m - 2; r >= 0; --r) sol[r] = (rhs[r] - upper[r] * sol[r + 1]) / diag[r];

    m2_.assign(n, 0.0);
    for (int i = 1; i <= n - 2; ++i) m2_[i] = sol[i - 1];
    m2_[0] = (1.0 + h[0] / h[1]) * m2_[1] - (h[0] / h[1]) * m2_[2];
    m2_[n - 1] = (1.0 + h[n - 2] / h[n - 3]) * m2_[n - 2] - (h[n - 2] / h[n - 3]) * m2_[n - 3];
  }

  double eval(double x) const {
    const int n = static_cast<int>(xs_.size());
    int i = static_cast<int>(std::upper_bound(xs_.begin(), xs_.end(), x) - xs_.begin()) - 1;
    i = std::max(0, std::min(i, n - 2));
    double h = xs_[i + 1] - xs_[i];
    double a = xs_[i + 1] - x, b = x - xs_[i];
    return m2_[i] * a * a * a / (6.0 * h) + m2_[i + 1] * b * b * b / (6.0 * h) +
           (ys_[i] / h - m2_[i] * h / 6.0) * a + (ys_[i + 1] / h - m2_[i + 1] * h / 6.0) * b;
  }

 private:
  std::vector<double> xs_, ys_;
  std::vector<double> m2_;
};

}  // namespace detail

// Resamples a track onto the uniform period grid spanning its time range.
// Cubic interpolation (not-a-knot) when there are at least 4 points, linear
// below that; never extrapolates.
inline RawTrack resample_track(const RawTrack& track, std::int64_t period) {
  if (period <= 0) throw std::invalid_argument("resample_track: period must be positive");
  const auto& pts = track.points;
  if (pts.size() < 2)
    throw std::invalid_argument("resample_track: degenerate track '" + track.target_id +
                                "' has fewer than 2 points");
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (pts[i].t <= pts[i - 1].t)
      throw std::invalid_argument("resample_track: timestamps not strictly increasing");

  const std::int64_t t0 = pts.front().t, t1 = pts.back().t;
  std::int64_t g0 = (t0 + period - 1) / period;  // ceil for non-negative times
  if (t0 < 0) g0 = t0 / period;                  // negative times are rejected below anyway
  std::int64_t g1 = t1 / period;
  if (t1 < 0) g1 = (t1 - period + 1) / period;

  RawTrack out;
  out.target_id = track.target_id;
  out.modality = track.modality;
  if (g0 > g1) return out;  // range shorter than one grid slot

  // exact pass-through for grid times that coincide with existing samples
  std::map<std::int64_t, const TrackPoint*> by_time;
  for (const auto& p : pts) by_time[p.t] = &p;

  auto interp_linear = [&](double t) -> std::pair<double, double> {
    auto it = std::upper_bound(pts.begin(), pts.end(), t,
                               [](double v, const TrackPoint& p) { return v < static_cast<double>(p.t); });
    std::size_t i = static_cast<std::size_t>(it - pts.begin());
    if (i == 0) i = 1;
    if (i >= pts.size()) i = pts.size() - 1;
    const TrackPoint& a = pts[i - 1];
    const TrackPoint& b = pts[i];
    double u = (t - static_cast<double>(a.t)) / static_cast<double>(b.t - a.t);
    return {a.x + u * (b.x - a.x), a.y + u * (b.y - a.y)};
  };

  const bool cubic = pts.size() >= 4;
  std::optional<detail::CubicSpline> sx, sy;
  if (cubic) {
    std::vector<double> ts, xs, ys;
    ts.reserve(pts.size());
    for (const auto& p : pts) {
      ts.push_back(static_cast<double>(p.t));
      xs.push_back(p.x);
      ys.push_back(p.y);
    }
    sx.emplace(ts, xs);
    sy.emplace(ts, ys);
  }

  for (std::int64_t g = g0; g <= g1; ++g) {
    std::int64_t t = g * period;
    auto hit = by_time.find(t);
    if (hit != by_time.end()) {
      out.points.push_back({t, hit->second->x, hit->second->y});
      continue;
    }
    double tx, ty;
    if (cubic) {
      tx = sx->eval(static_cast<double>(t));
      ty = sy->eval(static_cast<double>(t));
    } else {
      auto [lx, ly] = interp_linear(static_cast<double>(t));
      tx = lx;
      ty = ly;
    }
    out.points.push_back({t, tx, ty});
  }
  return out;
}

namespace detail {

struct SnappedSample {
  double x, y;
  std::int64_t dist;  // |t - snapped t|
};

// target id -> grid index -> sample, snapping each timestamp to the
// nearest grid multiple; collisions keep the sample closest to grid time.
inline std::map<std::string, std::map<std::int64_t, SnappedSample>> snap_to_grid(
    const std::vector<RawTrack>& tracks, std::int64_t period, std::int64_t& gmin,
    std::int64_t& gmax) {
  std::map<std::string, std::map<std::int64_t, SnappedSample>> per_target;
  gmin = INT64_MAX;
  gmax = INT64_MIN;
  for (const auto& tr : tracks) {
    auto& slots = per_target[tr.target_id];
    for (const auto& p : tr.points) {
      std::int64_t g = static_cast<std::int64_t>(
          std::llround(static_cast<double>(p.t) / static_cast<double>(period)));
      std::int64_t dist = std::llabs(p.t - g * period);
      auto it = slots.find(g);
      if (it == slots.end() || dist < it->second.dist) slots[g] = {p.x, p.y, dist};
      gmin = std::min(gmin, g);
      gmax = std::max(gmax, g);
    }
  }
  return per_target;
}

}  // namespace detail

// Windows over an explicit grid index range [gmin, gmax]; lets callers
// share one span across both modalities.
inline std::vector<ObservationSet> slice_windows_range(const std::vector<RawTrack>& tracks, int k,
                                                       int stride, std::int64_t period,
                                                       std::int64_t gmin, std::int64_t gmax) {
  if (k < 2) throw std::invalid_argument("slice_windows: window length must be >= 2");
  if (stride < 1) throw std::invalid_argument("slice_windows: stride must be >= 1");
  if (period <= 0) throw std::invalid_argument("slice_windows: period must be positive");

  std::int64_t own_min, own_max;
  auto per_target = detail::snap_to_grid(tracks, period, own_min, own_max);
  if (gmin > gmax) return {};
  const std::int64_t L = gmax - gmin + 1;

  std::vector<ObservationSet> out;
  for (std::int64_t start = 0; start + k <= L; start += stride) {
    TimeWindow w;
    w.timestamps.reserve(k);
    for (int t = 0; t < k; ++t) w.timestamps.push_back((gmin + start + t) * period);

    std::vector<std::string> present;
    for (const auto& [id, slots] : per_target) {
      auto lo = slots.lower_bound(gmin + start);
      if (lo != slots.end() && lo->first < gmin + start + k) present.push_back(id);
    }
    std::sort(present.begin(), present.end());

    ObservationSet obs = ObservationSet::empty(std::move(w), static_cast<int>(present.size()));
    for (int i = 0; i < static_cast<int>(present.size()); ++i) {
      obs.ids[i] = present[i];
      const auto& slots = per_target[present[i]];
      for (int t = 0; t < k; ++t) {
        auto it = slots.find(gmin + start + t);
        if (it != slots.end()) obs.set(i, t, it->second.x, it->second.y);
      }
    }
    out.push_back(std::move(obs));
  }
  return out;
}

// One observation set per window start offset over the common period grid
// spanning all tracks. Timestamps snap to the nearest grid multiple; when
// two samples of one target collide on a slot the one closer to the grid
// time wins. Target ids are sorted lexicographically.
inline std::vector<ObservationSet> slice_windows(const std::vector<RawTrack>& tracks, int k,
                                                 int stride, std::int64_t period) {
  if (tracks.empty()) return {};
  std::int64_t gmin, gmax;
  detail::snap_to_grid(tracks, period, gmin, gmax);
  if (gmin > gmax) return {};
  return slice_windows_range(tracks, k, stride, period, gmin, gmax);
}

// Pads two observation sets over the same window to a common target count
// N = max(N_a, N_b) by appending pure padding rows.
inline void pad_pair(ObservationSet& a, ObservationSet& b) {
  const int n = std::max(a.num_targets(), b.num_targets());
  auto grow = [n](ObservationSet& o) {
    if (o.num_targets() == n) return;
    ObservationSet g = ObservationSet::empty(o.window, n);
    for (int i = 0; i < o.num_targets(); ++i) {
      g.ids[i] = o.ids[i];
      for (int t = 0; t < o.length(); ++t)
        if (o.observed(i, t)) g.set(i, t, o.x(i, t), o.y(i, t));
    }
    o = std::move(g);
  };
  grow(a);
  grow(b);
}

// Least-squares fit of target = W * source + b over point pairs.
inline AffineTransform2D fit_affine(
    const std::vector<std::pair<std::array<double, 2>, std::array<double, 2>>>& pairs) {
  if (pairs.size() < 3)
    throw std::invalid_argument("fit_affine: need at least 3 point pairs, got " +
                                std::to_string(pairs.size()));
  // Normal equations with design rows (sx, sy, 1); shared Gram matrix for
  // both output dimensions.
  double g[3][3] = {};
  double rx[3] = {}, ry[3] = {};
  for (const auto& [s, t] : pairs) {
    const double row[3] = {s[0], s[1], 1.0};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) g[i][j] += row[i] * row[j];
      rx[i] += row[i] * t[0];
      ry[i] += row[i] * t[1];
    }
  }
  // Gaussian elimination with partial pivoting on [g | rx ry]
  double m[3][5];
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) m[i][j] = g[i][j];
    m[i][3] = rx[i];
    m[i][4] = ry[i];
  }
  double scale = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) scale = std::max(scale, std::abs(m[i][j]));
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
    if (std::abs(m[piv][col]) <= 1e-12 * std::max(scale, 1.0))
      throw std::invalid_argument(
          "fit_affine: rank-deficient system (source points collinear or coincident)");
    if (piv != col)
      for (int j = 0; j < 5; ++j) std::swap(m[piv][j], m[col][j]);
    for (int r = 0; r < 3; ++r) {
      if (r == col) continue;
      double f = m[r][col] / m[col][col];
      for (int j = col; j < 5; ++j) m[r][j] -= f * m[col][j];
    }
  }
  AffineTransform2D tf;
  tf.w[0][0] = m[0][3] / m[0][0];
  tf.w[0][1] = m[1][3] / m[1][1];
  tf.b[0] = m[2][3] / m[2][2];
  tf.w[1][0] = m[0][4] / m[0][0];
  tf.w[1][1] = m[1][4] / m[1][1];
  tf.b[1] = m[2][4] / m[2][2];
  return tf;
}

inline std::vector<std::array<double, 2>> apply_affine(const AffineTransform2D& tf,
                                                       const std::vector<std::array<double, 2>>& pts) {
  std::vector<std::array<double, 2>> out;
  out.reserve(pts.size());
  for (const auto& p : pts) {
    auto [x, y] = tf.apply(p[0], p[1]);
    out.push_back({x, y});
  }
  return out;
}

inline void apply_affine_inplace(const AffineTransform2D& tf, RawTrack& track) {
  for (auto& p : track.points) {
    auto [x, y] = tf.apply(p.x, p.y);
    p.x = x;
    p.y = y;
  }
}

// Maps observed coordinates linearly into [0,1]^2; padded slots stay (0,0).
inline ObservationSet normalize_coords(const ObservationSet& obs, const Bounds& bounds) {
  if (bounds.degenerate())
    throw std::invalid_argument("normalize_coords: degenerate bounds");
  ObservationSet out = obs;
  for (int i = 0; i < obs.num_targets(); ++i)
    for (int t = 0; t < obs.length(); ++t)
      if (obs.observed(i, t))
        out.set(i, t, (obs.x(i, t) - bounds.min_x) / bounds.width(),
                (obs.y(i, t) - bounds.min_y) / bounds.height());
  return out;
}

}  // namespace gmva
