#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "gmva/simulator.hpp"

using namespace gmva;

namespace {

bool tracks_equal(const std::vector<RawTrack>& a, const std::vector<RawTrack>& b,
                  bool compare_ids = true) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (compare_ids && a[i].target_id != b[i].target_id) return false;
    if (a[i].points.size() != b[i].points.size()) return false;
    for (std::size_t p = 0; p < a[i].points.size(); ++p) {
      if (a[i].points[p].t != b[i].points[p].t) return false;
      if (a[i].points[p].x != b[i].points[p].x) return false;
      if (a[i].points[p].y != b[i].points[p].y) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("noiseless identity camera makes both streams identical", "[simulator]") {
  ScenarioSpec spec;
  spec.n_vessels = 1;
  spec.ais_dropout_p = 0.0;
  spec.pixel_noise_std = 0.0;
  spec.occlusion_radius = 0.0;
  spec.seed = 5;
  Scenario sc = simulate(spec);
  REQUIRE(sc.tracks_a.size() == 1);
  REQUIRE(sc.tracks_b.size() == 1);
  CHECK(tracks_equal(sc.tracks_a, sc.tracks_b, /*compare_ids=*/false));
}

TEST_CASE("simulation is deterministic in the seed", "[simulator]") {
  ScenarioSpec spec = density_preset(DensityLevel::Low, 42);
  Scenario s1 = simulate(spec);
  Scenario s2 = simulate(spec);
  CHECK(tracks_equal(s1.tracks_a, s2.tracks_a));
  CHECK(tracks_equal(s1.tracks_b, s2.tracks_b));
  CHECK(s1.truth.pairs == s2.truth.pairs);
  CHECK(s1.deleted_ids == s2.deleted_ids);

  Scenario s3 = simulate(density_preset(DensityLevel::Low, 43));
  CHECK_FALSE(tracks_equal(s1.tracks_a, s3.tracks_a));
}

TEST_CASE("whole-track deletion removes tracks and truth pairs", "[simulator]") {
  ScenarioSpec spec = density_preset(DensityLevel::Low, 7);
  spec.missing_targets = 2;
  spec.missing_modality = MissingModality::A;
  Scenario sc = simulate(spec);
  CHECK(sc.tracks_a.size() == 8);
  CHECK(sc.tracks_b.size() == 10);
  CHECK(sc.deleted_ids.size() == 2);
  CHECK(sc.truth.pairs.size() == 8);
  for (const auto& id : sc.deleted_ids) {
    for (const auto& t : sc.tracks_a) CHECK(t.target_id != id);
    for (const auto& [a, b] : sc.truth.pairs) {
      CHECK(a != id);
      CHECK(b != id);
    }
  }
}

TEST_CASE("truth is a bijection before deletion", "[simulator]") {
  ScenarioSpec spec = density_preset(DensityLevel::Moderate, 9);
  spec.ais_dropout_p = 0.0;  // no chance of empty tracks
  Scenario sc = simulate(spec);
  CHECK(sc.truth.pairs.size() == 20);
  sc.truth.check_one_to_one();
}

TEST_CASE("positions stay inside the channel box", "[simulator]") {
  ScenarioSpec spec = density_preset(DensityLevel::High, 11);
  spec.camera_transform = AffineTransform2D::identity();
  spec.pixel_noise_std = 0.0;
  Scenario sc = simulate(spec);
  for (const auto& tracks : {sc.tracks_a, sc.tracks_b})
    for (const auto& t : tracks)
      for (const auto& p : t.points) {
        CHECK(p.x >= spec.channel.min_x);
        CHECK(p.x <= spec.channel.max_x);
        CHECK(p.y >= spec.channel.min_y);
        CHECK(p.y <= spec.channel.max_y);
      }
}

TEST_CASE("density presets pin the vessel counts", "[simulator]") {
  CHECK(density_preset(DensityLevel::Low, 1).n_vessels == 10);
  CHECK(density_preset(DensityLevel::Moderate, 1).n_vessels == 20);
  CHECK(density_preset(DensityLevel::High, 1).n_vessels == 30);
}

TEST_CASE("missing sweep derives one spec per count", "[simulator]") {
  ScenarioSpec base = density_preset(DensityLevel::High, 13);
  auto specs = missing_sweep(base, default_missing_counts());
  REQUIRE(specs.size() == 6);
  std::set<std::uint64_t> seeds;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    CHECK(specs[i].missing_targets == default_missing_counts()[i]);
    seeds.insert(specs[i].seed);
  }
  CHECK(seeds.size() == 6);  // pairwise distinct

  auto single = missing_sweep(base, {0});
  REQUIRE(single.size() == 1);
  CHECK(single[0].missing_targets == 0);

  CHECK_THROWS_AS(missing_sweep(base, {31}), std::invalid_argument);
}

TEST_CASE("spec validation", "[simulator]") {
  ScenarioSpec bad;
  bad.missing_targets = 11;
  bad.n_vessels = 10;
  CHECK_THROWS_WITH(simulate(bad), Catch::Matchers::ContainsSubstring("missing_targets"));

  ScenarioSpec neg;
  neg.ais_dropout_p = 1.5;
  CHECK_THROWS_AS(simulate(neg), std::invalid_argument);
}

TEST_CASE("occlusion drops the vessel farther from the camera origin", "[simulator]") {
  // two vessels forced together: huge occlusion radius drops one per frame
  ScenarioSpec spec;
  spec.n_vessels = 2;
  spec.ais_dropout_p = 0.0;
  spec.pixel_noise_std = 0.0;
  spec.occlusion_radius = 10.0;  // larger than the channel
  spec.seed = 3;
  Scenario sc = simulate(spec);
  REQUIRE(sc.tracks_a.size() == 2);
  // every sample time appears in at most one B track
  std::map<std::int64_t, int> seen;
  for (const auto& t : sc.tracks_b)
    for (const auto& p : t.points) seen[p.t]++;
  for (const auto& [t, count] : seen) CHECK(count == 1);
}
