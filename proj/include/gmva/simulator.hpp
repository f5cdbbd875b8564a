#pragma once

// Synthetic paired-sensor scenario generator. Vessels follow a smoothed
// random-heading constant-speed walk inside a reflective channel box.
// Stream A samples true positions on the period grid with per-sample
// dropout; stream B applies the camera transform, adds pixel noise and a
// deterministic occlusion rule. Whole-track deletions model missing
// targets. Everything derives from the scenario seed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "gmva/losses.hpp"
#include "gmva/tensor.hpp"
#include "gmva/trajectory.hpp"

namespace gmva {

enum class MissingModality { A, B, Either };

inline const char* missing_modality_name(MissingModality m) {
  switch (m) {
    case MissingModality::A: return "A";
    case MissingModality::B: return "B";
    case MissingModality::Either: return "either";
  }
  return "?";
}

inline MissingModality missing_modality_from_name(const std::string& s) {
  if (s == "A" || s == "a") return MissingModality::A;
  if (s == "B" || s == "b") return MissingModality::B;
  if (s == "either") return MissingModality::Either;
  throw std::invalid_argument("unknown missing modality: " + s);
}

struct ScenarioSpec {
  int n_vessels = 10;
  std::int64_t duration = 600;      // seconds
  std::int64_t sample_period = 10;  // seconds
  Bounds channel{0.0, 0.0, 1.0, 1.0};
  double speed_min = 0.005, speed_max = 0.02;  // units / s
  double turn_rate_std = 0.05;                 // rad / s
  double ais_dropout_p = 0.05;
  double pixel_noise_std = 0.003;
  AffineTransform2D camera_transform;
  double occlusion_radius = 0.01;
  int missing_targets = 0;
  MissingModality missing_modality = MissingModality::Either;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_vessels < 0 || missing_targets < 0)
      throw std::invalid_argument("ScenarioSpec: counts must be non-negative");
    if (missing_targets > n_vessels)
      throw std::invalid_argument("ScenarioSpec: missing_targets (" +
                                  std::to_string(missing_targets) + ") exceeds n_vessels (" +
                                  std::to_string(n_vessels) + ")");
    if (ais_dropout_p < 0.0 || ais_dropout_p > 1.0)
      throw std::invalid_argument("ScenarioSpec: ais_dropout_p must be a probability");
    if (duration <= 0 || sample_period <= 0)
      throw std::invalid_argument("ScenarioSpec: duration and sample_period must be positive");
    if (channel.degenerate()) throw std::invalid_argument("ScenarioSpec: degenerate channel box");
    if (speed_min < 0.0 || speed_max < speed_min)
      throw std::invalid_argument("ScenarioSpec: bad speed range");
  }
};

struct Scenario {
  std::vector<RawTrack> tracks_a, tracks_b;
  GroundTruth truth;  // references surviving ids only
  ScenarioSpec spec;
  std::vector<std::string> deleted_ids;
  Bounds bounds;  // shared normalization box: stream A bbox expanded 5%
};

namespace detail {

inline std::string vessel_id(char prefix, int idx) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%c%03d", prefix, idx);
  return buf;
}

}  // namespace detail

inline Scenario simulate(const ScenarioSpec& spec) {
  spec.validate();
  Scenario out;
  out.spec = spec;

  const int samples = static_cast<int>(spec.duration / spec.sample_period) + 1;

  // true positions per vessel per sample index
  std::vector<std::vector<std::array<double, 2>>> truth_pos(
      spec.n_vessels, std::vector<std::array<double, 2>>(samples));
  const double margin_x = 0.05 * spec.channel.width();
  const double margin_y = 0.05 * spec.channel.height();
  for (int v = 0; v < spec.n_vessels; ++v) {
    Rng rng(mix_seed(spec.seed, 100 + static_cast<std::uint64_t>(v)));
    double x = rng.uniform(spec.channel.min_x + margin_x, spec.channel.max_x - margin_x);
    double y = rng.uniform(spec.channel.min_y + margin_y, spec.channel.max_y - margin_y);
    double heading = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
    double speed = rng.uniform(spec.speed_min, spec.speed_max);

    int next_sample = 0;
    for (std::int64_t t = 0; t <= spec.duration; ++t) {
      if (t == static_cast<std::int64_t>(next_sample) * spec.sample_period) {
        truth_pos[v][next_sample] = {x, y};
        ++next_sample;
      }
      heading += rng.normal(0.0, spec.turn_rate_std);
      x += speed * std::cos(heading);
      y += speed * std::sin(heading);
      // reflective channel walls
      if (x < spec.channel.min_x) {
        x = 2.0 * spec.channel.min_x - x;
        heading = 3.14159265358979323846 - heading;
      } else if (x > spec.channel.max_x) {
        x = 2.0 * spec.channel.max_x - x;
        heading = 3.14159265358979323846 - heading;
      }
      if (y < spec.channel.min_y) {
        y = 2.0 * spec.channel.min_y - y;
        heading = -heading;
      } else if (y > spec.channel.max_y) {
        y = 2.0 * spec.channel.max_y - y;
        heading = -heading;
      }
    }
  }

  // stream A: true positions with per-sample dropout
  Rng drop_rng(mix_seed(spec.seed, 2));
  std::vector<RawTrack> tracks_a(spec.n_vessels);
  for (int v = 0; v < spec.n_vessels; ++v) {
    tracks_a[v].target_id = detail::vessel_id('a', v);
    tracks_a[v].modality = Modality::A;
    for (int s = 0; s < samples; ++s) {
      bool dropped = drop_rng.uniform01() < spec.ais_dropout_p;
      if (dropped) continue;
      tracks_a[v].points.push_back(
          {static_cast<std::int64_t>(s) * spec.sample_period, truth_pos[v][s][0], truth_pos[v][s][1]});
    }
  }

  // stream B: camera frame with pixel noise; occlusion drops the vessel
  // farther from the camera origin when two fall within the radius
  Rng noise_rng(mix_seed(spec.seed, 3));
  std::vector<std::vector<std::array<double, 2>>> cam_pos(
      spec.n_vessels, std::vector<std::array<double, 2>>(samples));
  for (int v = 0; v < spec.n_vessels; ++v)
    for (int s = 0; s < samples; ++s) {
      auto [cx, cy] = spec.camera_transform.apply(truth_pos[v][s][0], truth_pos[v][s][1]);
      cam_pos[v][s] = {cx, cy};
    }
  std::vector<std::vector<char>> occluded(spec.n_vessels, std::vector<char>(samples, 0));
  for (int s = 0; s < samples; ++s)
    for (int u = 0; u < spec.n_vessels; ++u)
      for (int v = u + 1; v < spec.n_vessels; ++v) {
        double d = std::hypot(cam_pos[u][s][0] - cam_pos[v][s][0],
                              cam_pos[u][s][1] - cam_pos[v][s][1]);
        if (d >= spec.occlusion_radius) continue;
        double ru = std::hypot(cam_pos[u][s][0], cam_pos[u][s][1]);
        double rv = std::hypot(cam_pos[v][s][0], cam_pos[v][s][1]);
        occluded[ru >= rv ? u : v][s] = 1;
      }
  std::vector<RawTrack> tracks_b(spec.n_vessels);
  for (int v = 0; v < spec.n_vessels; ++v) {
    tracks_b[v].target_id = detail::vessel_id('b', v);
    tracks_b[v].modality = Modality::B;
    for (int s = 0; s < samples; ++s) {
      double nx = noise_rng.normal(0.0, spec.pixel_noise_std);
      double ny = noise_rng.normal(0.0, spec.pixel_noise_std);
      if (occluded[v][s]) continue;
      tracks_b[v].points.push_back({static_cast<std::int64_t>(s) * spec.sample_period,
                                    cam_pos[v][s][0] + nx, cam_pos[v][s][1] + ny});
    }
  }

  // whole-track deletions
  std::set<std::string> removed;
  if (spec.missing_targets > 0) {
    Rng pick_rng(mix_seed(spec.seed, 4));
    std::vector<int> order(spec.n_vessels);
    for (int i = 0; i < spec.n_vessels; ++i) order[i] = i;
    pick_rng.shuffle(order);
    for (int m = 0; m < spec.missing_targets; ++m) {
      int v = order[m];
      MissingModality side = spec.missing_modality;
      if (side == MissingModality::Either)
        side = pick_rng.uniform01() < 0.5 ? MissingModality::A : MissingModality::B;
      removed.insert(side == MissingModality::A ? detail::vessel_id('a', v)
                                                : detail::vessel_id('b', v));
    }
  }

  for (int v = 0; v < spec.n_vessels; ++v) {
    const std::string ida = tracks_a[v].target_id;
    const std::string idb = tracks_b[v].target_id;
    bool drop_a = removed.count(ida) || tracks_a[v].points.empty();
    bool drop_b = removed.count(idb) || tracks_b[v].points.empty();
    if (removed.count(ida)) out.deleted_ids.push_back(ida);
    if (removed.count(idb)) out.deleted_ids.push_back(idb);
    if (!drop_a) out.tracks_a.push_back(std::move(tracks_a[v]));
    if (!drop_b) out.tracks_b.push_back(std::move(tracks_b[v]));
    if (!drop_a && !drop_b) out.truth.pairs.emplace_back(ida, idb);
  }

  out.bounds = Bounds::of_tracks(out.tracks_a).expanded(0.05);
  return out;
}

enum class DensityLevel { Low, Moderate, High };

inline const char* density_name(DensityLevel d) {
  switch (d) {
    case DensityLevel::Low: return "low";
    case DensityLevel::Moderate: return "moderate";
    case DensityLevel::High: return "high";
  }
  return "?";
}

inline DensityLevel density_from_name(const std::string& s) {
  if (s == "low") return DensityLevel::Low;
  if (s == "moderate") return DensityLevel::Moderate;
  if (s == "high") return DensityLevel::High;
  throw std::invalid_argument("unknown density level: " + s);
}

// 10 / 20 / 30 vessels with a mildly skewed camera frame so the coordinate
// alignment path is exercised.
inline ScenarioSpec density_preset(DensityLevel level, std::uint64_t seed) {
  ScenarioSpec spec;
  switch (level) {
    case DensityLevel::Low: spec.n_vessels = 10; break;
    case DensityLevel::Moderate: spec.n_vessels = 20; break;
    case DensityLevel::High: spec.n_vessels = 30; break;
  }
  spec.camera_transform.w[0][0] = 0.85;
  spec.camera_transform.w[0][1] = 0.10;
  spec.camera_transform.w[1][0] = -0.08;
  spec.camera_transform.w[1][1] = 0.92;
  spec.camera_transform.b[0] = 0.15;
  spec.camera_transform.b[1] = -0.05;
  spec.seed = seed;
  return spec;
}

// One spec per deletion count, with distinct derived seeds.
inline std::vector<ScenarioSpec> missing_sweep(const ScenarioSpec& base,
                                               const std::vector<int>& counts) {
  std::vector<ScenarioSpec> out;
  out.reserve(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] > base.n_vessels)
      throw std::invalid_argument("missing_sweep: count " + std::to_string(counts[i]) +
                                  " exceeds n_vessels " + std::to_string(base.n_vessels));
    ScenarioSpec s = base;
    s.missing_targets = counts[i];
    s.seed = mix_seed(base.seed, 7000 + i);
    out.push_back(s);
  }
  return out;
}

inline std::vector<int> default_missing_counts() { return {0, 2, 4, 6, 8, 10}; }

}  // namespace gmva
