#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "gmva/baselines.hpp"

using namespace gmva;

namespace {

constexpr double kGap = std::numeric_limits<double>::quiet_NaN();

ObservationSet obs_from(const std::vector<std::vector<std::array<double, 2>>>& coords,
                        char prefix) {
  const int n = static_cast<int>(coords.size());
  const int k = n > 0 ? static_cast<int>(coords[0].size()) : 0;
  TimeWindow w;
  for (int t = 0; t < k; ++t) w.timestamps.push_back(static_cast<std::int64_t>(t) * 10);
  ObservationSet obs = ObservationSet::empty(w, n);
  for (int i = 0; i < n; ++i) {
    obs.ids[i] = std::string(1, prefix) + std::to_string(i);
    for (int t = 0; t < k; ++t)
      if (std::isfinite(coords[i][t][0])) obs.set(i, t, coords[i][t][0], coords[i][t][1]);
  }
  return obs;
}

ObservationSet random_obs(int n, int k, Rng& rng, char prefix, double scale = 1.0) {
  std::vector<std::vector<std::array<double, 2>>> c(n);
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < k; ++t)
      c[i].push_back({scale * rng.uniform01(), scale * rng.uniform01()});
  return obs_from(c, prefix);
}

}  // namespace

TEST_CASE("identical observation sets match identically for all methods", "[baselines]") {
  Rng rng(3);
  std::vector<std::vector<std::array<double, 2>>> coords(4);
  for (int i = 0; i < 4; ++i)
    for (int t = 0; t < 5; ++t) coords[i].push_back({rng.uniform01(), rng.uniform01()});
  ObservationSet a = obs_from(coords, 'a');
  ObservationSet b = obs_from(coords, 'b');
  for (auto method : {BaselineMethod::ED, BaselineMethod::CD, BaselineMethod::DTW,
                      BaselineMethod::PDF}) {
    MatchingMatrix m = baseline_match(a, b, method);
    REQUIRE(m.pairs.size() == 4);
    for (auto [i, j] : m.pairs) CHECK(i == j);
  }
}

TEST_CASE("mean pointwise costs", "[baselines]") {
  // offset 0.3 in x, 0.4 in y at every co-valid step
  ObservationSet a = obs_from({{{0.0, 0.0}, {0.1, 0.1}}}, 'a');
  ObservationSet b = obs_from({{{0.3, 0.4}, {0.4, 0.5}}}, 'b');
  CHECK(baseline_costs(a, b, BaselineMethod::ED)[0][0] == Catch::Approx(0.5).margin(1e-12));
  CHECK(baseline_costs(a, b, BaselineMethod::CD)[0][0] == Catch::Approx(0.4).margin(1e-12));

  // disjoint masks fall back to mean positions
  ObservationSet ad = obs_from({{{0.0, 0.0}, {kGap, kGap}}}, 'a');
  ObservationSet bd = obs_from({{{kGap, kGap}, {3.0, 4.0}}}, 'b');
  CHECK(baseline_costs(ad, bd, BaselineMethod::ED)[0][0] == Catch::Approx(5.0).margin(1e-12));
  CHECK(baseline_costs(ad, bd, BaselineMethod::CD)[0][0] == Catch::Approx(4.0).margin(1e-12));

  // padded rows are +inf
  ObservationSet ap = obs_from({{{0.1, 0.1}, {0.2, 0.2}}, {{kGap, kGap}, {kGap, kGap}}}, 'a');
  ObservationSet bp = obs_from({{{0.1, 0.1}, {0.2, 0.2}}, {{0.5, 0.5}, {0.6, 0.6}}}, 'b');
  auto cost = baseline_costs(ap, bp, BaselineMethod::ED);
  CHECK(std::isinf(cost[1][0]));
  CHECK(std::isinf(cost[1][1]));
}

TEST_CASE("dtw follows the textbook dynamic program", "[baselines]") {
  // identical sequences cost zero
  ObservationSet a = obs_from({{{0.0, 0.0}, {1.0, 0.0}, {2.0, 0.0}}}, 'a');
  ObservationSet b = obs_from({{{0.0, 0.0}, {1.0, 0.0}, {2.0, 0.0}}}, 'b');
  CHECK(baseline_costs(a, b, BaselineMethod::DTW)[0][0] == 0.0);

  // [0,1,2] vs [0,0,1,2] on a line:
  //   local costs   0 0 1 2      cumulative   0 0 1 3
  //                 1 1 0 1                   1 1 0 1
  //                 2 2 1 0                   3 3 1 0
  // optimal warp aligns the doubled 0 for total cost 0
  ObservationSet a3 = obs_from({{{0.0, 0.0}, {1.0, 0.0}, {2.0, 0.0}, {kGap, kGap}}}, 'a');
  ObservationSet b4 = obs_from({{{0.0, 0.0}, {0.0, 0.0}, {1.0, 0.0}, {2.0, 0.0}}}, 'b');
  CHECK(baseline_costs(a3, b4, BaselineMethod::DTW)[0][0] == 0.0);

  // [0,3] vs [1]: DP table rows (1), (1+2) -> 3
  ObservationSet a2 = obs_from({{{0.0, 0.0}, {3.0, 0.0}}}, 'a');
  ObservationSet b1 = obs_from({{{1.0, 0.0}, {kGap, kGap}}}, 'b');
  CHECK(baseline_costs(a2, b1, BaselineMethod::DTW)[0][0] == Catch::Approx(3.0).margin(1e-12));
}

TEST_CASE("pdf uses the median displacement bandwidth", "[baselines]") {
  Rng rng(7);
  ObservationSet a = random_obs(3, 4, rng, 'a');
  ObservationSet b = random_obs(3, 4, rng, 'b');
  auto cost = baseline_costs(a, b, BaselineMethod::PDF);

  // recompute the bandwidth independently
  std::vector<double> disp;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int t = 0; t < 4; ++t)
        disp.push_back(std::hypot(a.x(i, t) - b.x(j, t), a.y(i, t) - b.y(j, t)));
  std::sort(disp.begin(), disp.end());
  double sigma = disp[disp.size() / 2];
  double s2 = sigma * sigma;

  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double expect = 0.0;
      for (int t = 0; t < 4; ++t) {
        double dx = a.x(i, t) - b.x(j, t), dy = a.y(i, t) - b.y(j, t);
        expect += (dx * dx + dy * dy) / (2.0 * s2) +
                  std::log(2.0 * 3.14159265358979323846 * s2);
      }
      CHECK(cost[i][j] == Catch::Approx(expect / 4.0).margin(1e-10));
    }
}

TEST_CASE("assignment is invariant to uniform coordinate scaling", "[baselines]") {
  Rng rng(11);
  for (auto method : {BaselineMethod::ED, BaselineMethod::CD, BaselineMethod::DTW,
                      BaselineMethod::PDF}) {
    for (int trial = 0; trial < 10; ++trial) {
      ObservationSet a = random_obs(4, 4, rng, 'a');
      ObservationSet b = random_obs(4, 4, rng, 'b');
      ObservationSet as = a, bs = b;
      for (double& v : as.coords.data) v *= 1000.0;
      for (double& v : bs.coords.data) v *= 1000.0;
      MatchingMatrix m1 = baseline_match(a, b, method);
      MatchingMatrix m2 = baseline_match(as, bs, method);
      CHECK(m1.pairs == m2.pairs);
    }
  }
}

TEST_CASE("method names round-trip", "[baselines]") {
  for (auto m : {BaselineMethod::ED, BaselineMethod::CD, BaselineMethod::DTW,
                 BaselineMethod::PDF})
    CHECK(baseline_from_name(baseline_name(m)) == m);
  CHECK_THROWS_AS(baseline_from_name("bogus"), std::invalid_argument);
}
