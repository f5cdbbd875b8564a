#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "gmva/fusion.hpp"
#include "test_util.hpp"

using namespace gmva;

namespace {

ObservationSet obs_from(const std::vector<std::vector<std::array<double, 2>>>& coords,
                        const std::vector<std::string>& ids, char prefix = 'v') {
  const int n = static_cast<int>(coords.size());
  const int k = n > 0 ? static_cast<int>(coords[0].size()) : 0;
  TimeWindow w;
  for (int t = 0; t < k; ++t) w.timestamps.push_back(static_cast<std::int64_t>(t) * 10);
  ObservationSet obs = ObservationSet::empty(w, n);
  for (int i = 0; i < n; ++i) {
    obs.ids[i] = ids.empty() ? std::string(1, prefix) + std::to_string(i) : ids[i];
    for (int t = 0; t < k; ++t)
      if (std::isfinite(coords[i][t][0])) obs.set(i, t, coords[i][t][0], coords[i][t][1]);
  }
  return obs;
}

constexpr double kGap = std::numeric_limits<double>::quiet_NaN();  // marks a hole

}  // namespace

TEST_CASE("target pooling", "[fusion]") {
  Rng rng(1);
  NetConfig cfg;
  cfg.d = 4;
  cfg.heads = 2;

  // single valid timestep: pooled feature equals that node row
  ObservationSet solo = obs_from({{{0.3, 0.4}, {kGap, kGap}, {kGap, kGap}}}, {"a0"});
  ParamStore store(3);
  NodeFeatures f = extract_features(solo, store, cfg);
  Value pooled = pool_target(f, solo, 0);
  for (int c = 0; c < cfg.d; ++c)
    CHECK(pooled.tensor().at(0, c) == f.values.tensor().at(f.row(0, 0), c));

  // mean of known rows
  ObservationSet tri = obs_from({{{0.1, 0.1}, {0.4, 0.2}, {0.9, 0.3}}}, {"a0"});
  ParamStore st2(5);
  NodeFeatures f2 = extract_features(tri, st2, cfg);
  Value p2 = pool_target(f2, tri, 0);
  for (int c = 0; c < cfg.d; ++c) {
    double mean = (f2.values.tensor().at(f2.row(0, 0), c) + f2.values.tensor().at(f2.row(0, 1), c) +
                   f2.values.tensor().at(f2.row(0, 2), c)) /
                  3.0;
    CHECK(p2.tensor().at(0, c) == Catch::Approx(mean).margin(1e-12));
  }

  // fully padded target is rejected
  ObservationSet padded = obs_from({{{0.1, 0.1}, {0.2, 0.2}}, {{kGap, kGap}, {kGap, kGap}}},
                                   {"a0", "a1"});
  ParamStore st3(7);
  NodeFeatures f3 = extract_features(padded, st3, cfg);
  CHECK_THROWS_AS(pool_target(f3, padded, 1), std::invalid_argument);
}

TEST_CASE("geometric features", "[fusion]") {
  // identical moving trajectories: d = 0, phi = (0, 1)
  std::vector<std::array<double, 2>> path{{0.0, 0.0}, {0.1, 0.0}, {0.2, 0.0}};
  ObservationSet a = obs_from({path}, {"a0"});
  ObservationSet b = obs_from({path}, {"b0"});
  auto g = geometric_features(a, b, 0, 0);
  CHECK(g[0] == Catch::Approx(0.0).margin(1e-15));
  CHECK(g[1] == Catch::Approx(0.0).margin(1e-15));
  CHECK(g[2] == Catch::Approx(1.0).margin(1e-12));

  // parallel tracks offset by 0.1 in x
  std::vector<std::array<double, 2>> shifted{{0.1, 0.0}, {0.2, 0.0}, {0.3, 0.0}};
  ObservationSet bs = obs_from({shifted}, {"b0"});
  auto g2 = geometric_features(a, bs, 0, 0);
  CHECK(g2[0] == Catch::Approx(0.1).margin(1e-12));
  CHECK(g2[1] == Catch::Approx(0.0).margin(1e-15));
  CHECK(g2[2] == Catch::Approx(1.0).margin(1e-12));

  // antiparallel unit velocities: phi = (2, -1)
  std::vector<std::array<double, 2>> right{{0.0, 0.0}, {1.0, 0.0}, {2.0, 0.0}};
  std::vector<std::array<double, 2>> left{{2.0, 0.0}, {1.0, 0.0}, {0.0, 0.0}};
  ObservationSet ar = obs_from({right}, {"a0"});
  ObservationSet bl = obs_from({left}, {"b0"});
  auto g3 = geometric_features(ar, bl, 0, 0);
  CHECK(g3[1] == Catch::Approx(2.0).margin(1e-12));
  CHECK(g3[2] == Catch::Approx(-1.0).margin(1e-12));

  // stationary targets have zero cosine by convention
  std::vector<std::array<double, 2>> still{{0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}};
  ObservationSet as = obs_from({still}, {"a0"});
  ObservationSet bst = obs_from({still}, {"b0"});
  CHECK(geometric_features(as, bst, 0, 0)[2] == 0.0);

  // disjoint masks fall back to mean positions
  ObservationSet ad = obs_from({{{0.0, 0.0}, {kGap, kGap}}}, {"a0"});
  ObservationSet bd = obs_from({{{kGap, kGap}, {3.0, 4.0}}}, {"b0"});
  CHECK(geometric_features(ad, bd, 0, 0)[0] == Catch::Approx(5.0).margin(1e-12));
}

TEST_CASE("uncertainty head closed forms", "[fusion]") {
  NetConfig cfg;
  cfg.d = 4;
  cfg.heads = 2;
  const int in_dim = 2 * cfg.d + kGeoFeatures;
  Rng rng(9);
  Tensor f = testutil::random_tensor(1, in_dim, rng);

  // zero the mean head entirely: mu = 0 so s = 0.5 for any logvar
  ParamStore store(11);
  ufm_score(Value::constant(f), store, cfg.d);  // creates parameters
  store.at("ufm.mu.w3").tensor().fill(0.0);
  store.at("ufm.mu.b3").tensor().fill(0.0);
  UfmScore s = ufm_score(Value::constant(f), store, cfg.d);
  CHECK(s.mu.item() == 0.0);
  CHECK(s.s.item() == 0.5);

  // mu = 1, logvar = 0: s = sigmoid(1)
  store.at("ufm.mu.b3").tensor().fill(1.0);
  store.at("ufm.mu.w3").tensor().fill(0.0);
  store.at("ufm.logvar.w3").tensor().fill(0.0);
  store.at("ufm.logvar.b3").tensor().fill(0.0);
  UfmScore s2 = ufm_score(Value::constant(f), store, cfg.d);
  CHECK(s2.s.item() == Catch::Approx(0.7310585786300049).margin(1e-12));

  // fixed mu > 0: s strictly decreases as logvar grows
  double prev = 1.0;
  for (double lv : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
    store.at("ufm.logvar.b3").tensor().fill(lv);
    double cur = ufm_score(Value::constant(f), store, cfg.d).s.item();
    CHECK(cur < prev);
    CHECK(cur > 0.0);
    CHECK(cur < 1.0);
    prev = cur;
  }

  // logvar clamps before exp
  store.at("ufm.logvar.b3").tensor().fill(500.0);
  UfmScore s3 = ufm_score(Value::constant(f), store, cfg.d);
  CHECK(std::isfinite(s3.s.item()));
  CHECK(s3.s.item() == Catch::Approx(0.5).margin(1e-3));  // mu / exp(10) is tiny
}

TEST_CASE("similarity matrix matches per-pair recomputation", "[fusion]") {
  Rng rng(21);
  NetConfig cfg;
  cfg.d = 4;
  cfg.heads = 2;

  ObservationSet a = obs_from({{{0.1, 0.2}, {0.2, 0.3}}, {{0.8, 0.1}, {0.7, 0.2}}}, {"a0", "a1"});
  ObservationSet b = obs_from({{{0.1, 0.25}, {0.2, 0.35}}, {{0.82, 0.1}, {0.72, 0.2}}},
                              {"b0", "b1"});
  ParamStore store(31);
  NodeFeatures fa = extract_features(a, store, cfg);
  NodeFeatures fb = extract_features(b, store, cfg);
  SimilarityComputation sim = similarity_matrix(fa, fb, a, b, store, cfg);
  REQUIRE_FALSE(sim.empty());

  auto [pooled_a, ta] = pooled_features(fa, a);
  auto [pooled_b, tb] = pooled_features(fb, b);
  for (std::size_t r = 0; r < ta.size(); ++r)
    for (std::size_t c = 0; c < tb.size(); ++c) {
      auto geo = geometric_features(a, b, ta[r], tb[c]);
      Value f = pair_feature_vector(pooled_a, static_cast<int>(r), pooled_b, static_cast<int>(c),
                                    geo);
      UfmScore u = ufm_score(f, store, cfg.d);
      CHECK(sim.score_mat.tensor().at(static_cast<int>(r), static_cast<int>(c)) == u.s.item());
      CHECK(sim.mu_mat.tensor().at(static_cast<int>(r), static_cast<int>(c)) == u.mu.item());
    }

  SimilarityMatrix dense = sim.dense();
  CHECK(dense.n == 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      CHECK(dense.scores.at(i, j) >= 0.0);
      CHECK(dense.scores.at(i, j) <= 1.0);
      CHECK(dense.scores.at(i, j) ==
            sigmoid_scalar(dense.mu.at(i, j) *
                           std::exp(-std::clamp(dense.logvar.at(i, j), -10.0, 10.0))));
    }
}

TEST_CASE("similarity with empty or padded sides", "[fusion]") {
  NetConfig cfg;
  cfg.d = 4;
  cfg.heads = 2;
  ObservationSet a = obs_from({{{0.1, 0.2}, {0.2, 0.3}}}, {"a0"});
  ObservationSet b = obs_from({{{kGap, kGap}, {kGap, kGap}}}, {""});
  ParamStore store(41);
  NodeFeatures fa = extract_features(a, store, cfg);
  NodeFeatures fb = extract_features(b, store, cfg);
  SimilarityComputation sim = similarity_matrix(fa, fb, a, b, store, cfg);
  CHECK(sim.empty());
  SimilarityMatrix dense = sim.dense();
  CHECK(dense.valid_rows[0] == 1);
  CHECK(dense.valid_cols[0] == 0);
  CHECK(dense.scores.at(0, 0) == 0.0);

  MatchingMatrix m = match(dense, 0.0);
  CHECK(m.pairs.empty());
  CHECK(m.unmatched_a == std::vector<int>{0});
  CHECK(m.unmatched_b.empty());
}

TEST_CASE("single valid pair scores in the unit interval", "[fusion]") {
  NetConfig cfg;
  cfg.d = 4;
  cfg.heads = 2;
  ObservationSet a = obs_from({{{0.4, 0.4}, {0.5, 0.5}}}, {"a0"});
  ObservationSet b = obs_from({{{0.4, 0.45}, {0.5, 0.55}}}, {"b0"});
  ParamStore store(51);
  NodeFeatures fa = extract_features(a, store, cfg);
  NodeFeatures fb = extract_features(b, store, cfg);
  SimilarityComputation sim = similarity_matrix(fa, fb, a, b, store, cfg);
  REQUIRE(sim.row_targets.size() == 1);
  double s = sim.score_mat.tensor().at(0, 0);
  CHECK(s > 0.0);
  CHECK(s < 1.0);
}

TEST_CASE("threshold matching", "[fusion]") {
  auto sim_of = [](std::vector<std::vector<double>> scores) {
    SimilarityMatrix m;
    m.n = static_cast<int>(scores.size());
    m.scores = Tensor(m.n, m.n);
    m.mu = Tensor(m.n, m.n);
    m.logvar = Tensor(m.n, m.n);
    m.valid_rows.assign(m.n, 1);
    m.valid_cols.assign(m.n, 1);
    for (int i = 0; i < m.n; ++i)
      for (int j = 0; j < m.n; ++j) m.scores.at(i, j) = scores[i][j];
    return m;
  };

  // tau = 0: pure assignment on the valid block
  MatchingMatrix m0 = match(sim_of({{0.9, 0.1}, {0.2, 0.8}}), 0.0);
  REQUIRE(m0.pairs.size() == 2);
  CHECK(m0.matched(0, 0));
  CHECK(m0.matched(1, 1));
  CHECK(m0.unmatched_a.empty());

  // threshold removes row 1 and column 1 entirely
  MatchingMatrix m1 = match(sim_of({{0.9, 0.1}, {0.2, 0.3}}), 0.5);
  REQUIRE(m1.pairs.size() == 1);
  CHECK(m1.matched(0, 0));
  CHECK(m1.unmatched_a == std::vector<int>{1});
  CHECK(m1.unmatched_b == std::vector<int>{1});

  // tau = 1 with all scores below: empty matching
  MatchingMatrix m2 = match(sim_of({{0.9, 0.1}, {0.2, 0.8}}), 1.0);
  CHECK(m2.pairs.empty());
  CHECK(m2.unmatched_a.size() == 2);
  CHECK(m2.unmatched_b.size() == 2);

  // one-to-one row/column sums and tau-monotonicity on random matrices
  Rng rng(61);
  for (int trial = 0; trial < 30; ++trial) {
    int n = 2 + static_cast<int>(rng.below(5));
    std::vector<std::vector<double>> s(n, std::vector<double>(n));
    for (auto& row : s)
      for (auto& v : row) v = rng.uniform01();
    std::size_t prev_pairs = static_cast<std::size_t>(n) + 1;
    for (double tau : {0.0, 0.25, 0.5, 0.75, 0.95}) {
      MatchingMatrix m = match(sim_of(s), tau);
      CHECK(m.pairs.size() <= prev_pairs);
      prev_pairs = m.pairs.size();
      for (int i = 0; i < n; ++i) {
        int row_sum = 0, col_sum = 0;
        for (int j = 0; j < n; ++j) {
          row_sum += m.entries[static_cast<std::size_t>(i) * n + j];
          col_sum += m.entries[static_cast<std::size_t>(j) * n + i];
        }
        CHECK(row_sum <= 1);
        CHECK(col_sum <= 1);
      }
      for (const auto& [i, j] : m.pairs) CHECK(s[i][j] >= tau);
    }
  }
}

TEST_CASE("assignment is equivariant to simultaneous permutation", "[fusion]") {
  Rng rng(71);
  NetConfig cfg;
  cfg.d = 4;
  cfg.heads = 2;

  const int n = 3, k = 2;
  std::vector<std::vector<std::array<double, 2>>> ca(n), cb(n);
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < k; ++t) {
      double x = rng.uniform01(), y = rng.uniform01();
      ca[i].push_back({x, y});
      cb[i].push_back({x + 0.01, y - 0.01});
    }
  ObservationSet a = obs_from(ca, {"a0", "a1", "a2"});
  ObservationSet b = obs_from(cb, {"b0", "b1", "b2"});

  // permutation sigma = (2, 0, 1) applied to both sides
  const int sigma[3] = {2, 0, 1};
  std::vector<std::vector<std::array<double, 2>>> pa(n), pb(n);
  std::vector<std::string> ida(n), idb(n);
  for (int i = 0; i < n; ++i) {
    pa[sigma[i]] = ca[i];
    pb[sigma[i]] = cb[i];
  }
  ObservationSet ap = obs_from(pa, {"x0", "x1", "x2"});
  ObservationSet bp = obs_from(pb, {"y0", "y1", "y2"});

  ParamStore s1(81), s2(81);
  MatchingMatrix m = match(
      similarity_matrix(extract_features(a, s1, cfg), extract_features(b, s1, cfg), a, b, s1, cfg)
          .dense(),
      0.0);
  MatchingMatrix mp = match(similarity_matrix(extract_features(ap, s2, cfg),
                                              extract_features(bp, s2, cfg), ap, bp, s2, cfg)
                                .dense(),
                            0.0);
  std::set<std::pair<int, int>> base, permuted;
  for (auto [i, j] : m.pairs) base.insert({sigma[i], sigma[j]});
  for (auto [i, j] : mp.pairs) permuted.insert({i, j});
  CHECK(base == permuted);
}
