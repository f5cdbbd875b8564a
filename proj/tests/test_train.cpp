#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "gmva/pipeline.hpp"
#include "gmva/train.hpp"

using namespace gmva;

namespace {

std::vector<WindowPair> small_dataset(std::uint64_t seed, int n_vessels = 4) {
  ScenarioSpec spec;
  spec.n_vessels = n_vessels;
  spec.duration = 300;
  spec.ais_dropout_p = 0.0;
  spec.pixel_noise_std = 0.0;
  spec.occlusion_radius = 0.0;
  spec.seed = seed;
  Scenario sc = simulate(spec);
  return prepare_windows(sc, 6, 1);
}

NetConfig tiny_net() {
  NetConfig cfg;
  cfg.d = 8;
  cfg.heads = 2;
  cfg.tga_layers = 1;
  cfg.ffn_hidden = 8;
  return cfg;
}

}  // namespace

TEST_CASE("zero learning rate leaves parameters and loss flat", "[train]") {
  auto data = small_dataset(3);
  REQUIRE(!data.empty());
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.lr = 0.0;
  cfg.seed = 1;
  TrainResult r = train(data, tiny_net(), cfg);
  REQUIRE(r.history.size() == 3);
  CHECK(r.history[0].train_loss == r.history[1].train_loss);
  CHECK(r.history[1].train_loss == r.history[2].train_loss);
}

TEST_CASE("training reduces the loss on a small noiseless scene", "[train]") {
  auto data = small_dataset(5);
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.lr = 1e-3;
  cfg.seed = 2;
  TrainResult r = train(data, tiny_net(), cfg);
  REQUIRE(r.history.size() == 20);
  CHECK(r.history.back().train_loss < r.history.front().train_loss);
  CHECK(r.best_epoch >= 0);
}

TEST_CASE("training is bit-deterministic in the seed", "[train]") {
  auto data = small_dataset(7);
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.lr = 1e-3;
  cfg.seed = 9;
  TrainResult r1 = train(data, tiny_net(), cfg);
  TrainResult r2 = train(data, tiny_net(), cfg);
  REQUIRE(r1.history.size() == r2.history.size());
  for (std::size_t i = 0; i < r1.history.size(); ++i) {
    CHECK(r1.history[i].train_loss == r2.history[i].train_loss);
    CHECK(r1.history[i].val_loss == r2.history[i].val_loss);
    CHECK(r1.history[i].val_acc == r2.history[i].val_acc);
  }
  for (const auto& [path, v] : r1.params.all()) {
    const Tensor& other = r2.params.at(path).tensor();
    for (std::size_t i = 0; i < v.tensor().data.size(); ++i)
      CHECK(v.tensor().data[i] == other.data[i]);
  }
}

TEST_CASE("non-finite input data aborts with epoch and window named", "[train]") {
  auto data = small_dataset(11);
  data[0].a.coords.data[0] = std::numeric_limits<double>::quiet_NaN();
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.lr = 1e-3;
  cfg.seed = 1;
  cfg.val_fraction = 0.0;
  try {
    train(data, tiny_net(), cfg);
    FAIL("expected TrainingDiverged");
  } catch (const TrainingDiverged& e) {
    CHECK(e.epoch == 0);
    CHECK(std::string(e.what()).find("epoch") != std::string::npos);
    CHECK(std::string(e.what()).find("window") != std::string::npos);
  }
}

TEST_CASE("empty dataset is rejected", "[train]") {
  TrainConfig cfg;
  CHECK_THROWS_AS(train({}, tiny_net(), cfg), std::invalid_argument);
}

TEST_CASE("prepared windows align both modalities and restrict truth", "[train]") {
  ScenarioSpec spec;
  spec.n_vessels = 3;
  spec.duration = 200;
  spec.ais_dropout_p = 0.0;
  spec.pixel_noise_std = 0.0;
  spec.occlusion_radius = 0.0;
  spec.seed = 21;
  // non-trivial camera: windows should still align after the fitted transform
  spec.camera_transform.w[0][0] = 0.9;
  spec.camera_transform.w[0][1] = 0.1;
  spec.camera_transform.w[1][0] = -0.1;
  spec.camera_transform.w[1][1] = 1.1;
  spec.camera_transform.b[0] = 0.2;
  spec.camera_transform.b[1] = -0.3;
  Scenario sc = simulate(spec);
  auto windows = prepare_windows(sc, 6, 6);
  REQUIRE(!windows.empty());
  for (const auto& w : windows) {
    CHECK(w.a.num_targets() == w.b.num_targets());
    CHECK(w.a.window.timestamps == w.b.window.timestamps);
    CHECK(w.truth.pairs.size() == 3);  // all vessels present, noiseless
    // normalized coordinates
    for (int i = 0; i < w.a.num_targets(); ++i)
      for (int t = 0; t < w.a.length(); ++t)
        if (w.a.observed(i, t)) {
          CHECK(w.a.x(i, t) >= -0.01);
          CHECK(w.a.x(i, t) <= 1.01);
        }
  }

  // the fitted transform undoes the camera: co-timed points nearly coincide
  const auto& w0 = windows[0];
  for (const auto& [ida, idb] : w0.truth.pairs) {
    int ia = w0.a.find_id(ida);
    int ib = w0.b.find_id(idb);
    for (int t = 0; t < w0.a.length(); ++t)
      if (w0.a.observed(ia, t) && w0.b.observed(ib, t)) {
        CHECK(w0.a.x(ia, t) == Catch::Approx(w0.b.x(ib, t)).margin(1e-6));
        CHECK(w0.a.y(ia, t) == Catch::Approx(w0.b.y(ib, t)).margin(1e-6));
      }
  }
}

TEST_CASE("parallel_for covers every index exactly once", "[train]") {
  std::vector<int> hits(100, 0);
  parallel_for(100, 4, [&](int i) { hits[i]++; });
  for (int h : hits) CHECK(h == 1);
  parallel_for(0, 4, [&](int) { FAIL("must not be called"); });
}
