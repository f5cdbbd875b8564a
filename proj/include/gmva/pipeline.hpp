#pragma once

// Glue between scenarios and the matcher: coordinate unification of the
// camera stream via least squares on co-timed calibration pairs, shared
// normalization, aligned window slicing for both modalities, and the
// per-window evaluation drivers used by training, association and sweeps.

#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <map>
#include <stdexcept>
#include <thread>
#include <vector>

#include "gmva/baselines.hpp"
#include "gmva/fusion.hpp"
#include "gmva/losses.hpp"
#include "gmva/network.hpp"
#include "gmva/simulator.hpp"
#include "gmva/trajectory.hpp"

namespace gmva {

struct WindowPair {
  ObservationSet a, b;  // padded to common N, normalized coordinates
  GroundTruth truth;    // restricted to pairs observable in this window
};

// Least-squares camera-to-reference transform fitted from co-timed samples
// of ground-truth matched tracks; identity when the fit is impossible.
inline AffineTransform2D fit_scenario_transform(const Scenario& sc) {
  std::map<std::string, const RawTrack*> a_by_id, b_by_id;
  for (const auto& t : sc.tracks_a) a_by_id[t.target_id] = &t;
  for (const auto& t : sc.tracks_b) b_by_id[t.target_id] = &t;

  std::vector<std::pair<std::array<double, 2>, std::array<double, 2>>> pairs;
  for (const auto& [ida, idb] : sc.truth.pairs) {
    auto ia = a_by_id.find(ida);
    auto ib = b_by_id.find(idb);
    if (ia == a_by_id.end() || ib == b_by_id.end()) continue;
    std::map<std::int64_t, std::array<double, 2>> at;
    for (const auto& p : ia->second->points) at[p.t] = {p.x, p.y};
    for (const auto& p : ib->second->points) {
      auto hit = at.find(p.t);
      if (hit != at.end()) pairs.push_back({{p.x, p.y}, hit->second});
    }
  }
  if (pairs.size() < 3) return AffineTransform2D::identity();
  try {
    return fit_affine(pairs);
  } catch (const std::invalid_argument&) {
    return AffineTransform2D::identity();
  }
}

// Aligned, normalized window pairs over the union time span of both streams.
inline std::vector<WindowPair> prepare_windows(const Scenario& sc, int k, int stride) {
  const std::int64_t period = sc.spec.sample_period;
  AffineTransform2D to_ref = fit_scenario_transform(sc);
  std::vector<RawTrack> tracks_b = sc.tracks_b;
  for (auto& t : tracks_b) apply_affine_inplace(to_ref, t);

  std::int64_t amin = INT64_MAX, amax = INT64_MIN, bmin = INT64_MAX, bmax = INT64_MIN;
  detail::snap_to_grid(sc.tracks_a, period, amin, amax);
  detail::snap_to_grid(tracks_b, period, bmin, bmax);
  const std::int64_t gmin = std::min(amin, bmin);
  const std::int64_t gmax = std::max(amax, bmax);
  if (gmin > gmax) return {};

  auto wins_a = slice_windows_range(sc.tracks_a, k, stride, period, gmin, gmax);
  auto wins_b = slice_windows_range(tracks_b, k, stride, period, gmin, gmax);

  Bounds bounds = sc.bounds;
  if (bounds.degenerate()) bounds = Bounds::of_tracks(sc.tracks_a).expanded(0.05);

  std::vector<WindowPair> out;
  out.reserve(wins_a.size());
  for (std::size_t w = 0; w < wins_a.size() && w < wins_b.size(); ++w) {
    WindowPair wp;
    wp.a = normalize_coords(wins_a[w], bounds);
    wp.b = normalize_coords(wins_b[w], bounds);
    pad_pair(wp.a, wp.b);
    for (const auto& [ida, idb] : sc.truth.pairs) {
      int ia = wp.a.find_id(ida);
      int ib = wp.b.find_id(idb);
      if (ia >= 0 && ib >= 0 && wp.a.target_has_observation(ia) &&
          wp.b.target_has_observation(ib))
        wp.truth.pairs.emplace_back(ida, idb);
    }
    out.push_back(std::move(wp));
  }
  return out;
}

inline std::vector<WindowPair> make_dataset(const std::vector<Scenario>& scenarios, int k,
                                            int stride) {
  std::vector<WindowPair> out;
  for (const auto& sc : scenarios) {
    auto w = prepare_windows(sc, k, stride);
    out.insert(out.end(), std::make_move_iterator(w.begin()), std::make_move_iterator(w.end()));
  }
  return out;
}

// Model inference on one window: features for both streams, similarity,
// thresholded assignment.
inline MatchingMatrix associate_window(const WindowPair& w, ParamStore& params,
                                       const NetConfig& cfg, double tau,
                                       SimilarityMatrix* sim_out = nullptr) {
  NodeFeatures fa = extract_features(w.a, params, cfg);
  NodeFeatures fb = extract_features(w.b, params, cfg);
  SimilarityComputation sim = similarity_matrix(fa, fb, w.a, w.b, params, cfg);
  SimilarityMatrix dense = sim.dense();
  if (sim_out) *sim_out = dense;
  return match(dense, tau);
}

struct EvalResult {
  double mean_accuracy = 0.0;
  int windows_scored = 0;  // windows with nonempty ground truth
  double seconds = 0.0;
};

// Mean window accuracy of the model over the given windows.
inline EvalResult evaluate_model(const std::vector<WindowPair>& windows, ParamStore& params,
                                 const NetConfig& cfg, double tau) {
  EvalResult r;
  auto t0 = std::chrono::steady_clock::now();
  double acc = 0.0;
  for (const auto& w : windows) {
    if (w.truth.pairs.empty()) continue;
    MatchingMatrix m = associate_window(w, params, cfg, tau);
    acc += accuracy(m, w.a, w.b, w.truth);
    ++r.windows_scored;
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (r.windows_scored > 0) r.mean_accuracy = acc / r.windows_scored;
  return r;
}

inline EvalResult evaluate_baseline(const std::vector<WindowPair>& windows,
                                    BaselineMethod method) {
  EvalResult r;
  auto t0 = std::chrono::steady_clock::now();
  double acc = 0.0;
  for (const auto& w : windows) {
    if (w.truth.pairs.empty()) continue;
    MatchingMatrix m = baseline_match(w.a, w.b, method);
    acc += accuracy(m, w.a, w.b, w.truth);
    ++r.windows_scored;
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (r.windows_scored > 0) r.mean_accuracy = acc / r.windows_scored;
  return r;
}

// Runs fn(0..n-1) on up to `threads` workers; results must land in
// preallocated slots so the outcome does not depend on scheduling.
inline void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  for (int w = 0; w < threads; ++w)
    pool.emplace_back([&, w] {
      try {
        for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline int env_thread_cap() {
  const char* env = std::getenv("MVA_THREADS");
  if (env) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

}  // namespace gmva
