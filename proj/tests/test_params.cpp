#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "gmva/params.hpp"

using namespace gmva;

TEST_CASE("initialization is a pure function of seed and path", "[params]") {
  ParamStore s1(42), s2(42), s3(43);
  Value a1 = s1.get("w.a", 4, 8);
  Value b1 = s1.get("w.b", 4, 8);
  // opposite creation order
  Value b2 = s2.get("w.b", 4, 8);
  Value a2 = s2.get("w.a", 4, 8);
  for (std::size_t i = 0; i < a1.tensor().data.size(); ++i) {
    CHECK(a1.tensor().data[i] == a2.tensor().data[i]);
    CHECK(b1.tensor().data[i] == b2.tensor().data[i]);
  }
  Value a3 = s3.get("w.a", 4, 8);
  bool all_same = true;
  for (std::size_t i = 0; i < a1.tensor().data.size(); ++i)
    all_same = all_same && a1.tensor().data[i] == a3.tensor().data[i];
  CHECK_FALSE(all_same);

  const double bound = std::sqrt(1.0 / 4);
  for (double v : a1.tensor().data) {
    CHECK(v >= -bound);
    CHECK(v <= bound);
  }

  Value z = s1.get("b", 1, 8, Init::kZeros);
  for (double v : z.tensor().data) CHECK(v == 0.0);
  Value g = s1.get("ln.g", 1, 8, Init::kOnes);
  for (double v : g.tensor().data) CHECK(v == 1.0);
}

TEST_CASE("adam with zero gradients leaves parameters unchanged", "[params]") {
  ParamStore s(1);
  Value w = s.get("w", 2, 2);
  Tensor before = w.tensor();
  s.zero_grads();
  s.adam_step(0.1);
  for (std::size_t i = 0; i < before.data.size(); ++i)
    CHECK(w.tensor().data[i] == before.data[i]);
}

TEST_CASE("single adam step matches the hand-computed update", "[params]") {
  ParamStore s(1);
  Value w = s.get("w", 1, 1, Init::kZeros);
  w.tensor().data[0] = 1.0;
  s.zero_grads();
  w.node()->ensure_grad().data[0] = 1.0;
  s.adam_step(0.1, 0.9, 0.999, 1e-8, 0.0);
  // m=0.1, v=0.001, mhat=1, vhat=1 -> step = 0.1 / (1 + 1e-8)
  const double expect = 1.0 - 0.1 / (1.0 + 1e-8);
  CHECK(w.tensor().data[0] == Catch::Approx(expect).margin(1e-15));
}

TEST_CASE("gradient norm clipping rescales before the update", "[params]") {
  ParamStore s(1);
  Value w = s.get("w", 1, 2, Init::kZeros);
  s.zero_grads();
  w.node()->ensure_grad().data[0] = 60.0;
  w.node()->ensure_grad().data[1] = 80.0;  // norm 100
  CHECK(s.grad_norm() == Catch::Approx(100.0));
  s.adam_step(0.1, 0.9, 0.999, 1e-8, 1.0);
  // effective gradient is (0.6, 0.8); per-entry update follows Adam on that
  auto adam1 = [](double g) {
    double m = 0.1 * g, v = 0.001 * g * g;
    return 0.1 * (m / 0.1) / (std::sqrt(v / 0.001) + 1e-8);
  };
  CHECK(w.tensor().data[0] == Catch::Approx(-adam1(0.6)).margin(1e-12));
  CHECK(w.tensor().data[1] == Catch::Approx(-adam1(0.8)).margin(1e-12));
}

TEST_CASE("checkpoint round-trips bit-exactly", "[params]") {
  ParamStore s(99);
  s.get("net.w1", 3, 5);
  s.get("net.b1", 1, 5, Init::kZeros);
  s.get("ufm.w", 7, 2);

  auto path = std::filesystem::temp_directory_path() / "gmva_test_ckpt.bin";
  s.save(path.string());
  ParamStore loaded = ParamStore::load(path.string());
  REQUIRE(loaded.all().size() == s.all().size());
  for (const auto& [name, v] : s.all()) {
    const Tensor& orig = v.tensor();
    const Tensor& got = loaded.at(name).tensor();
    REQUIRE(got.shape == orig.shape);
    for (std::size_t i = 0; i < orig.data.size(); ++i) CHECK(got.data[i] == orig.data[i]);
  }
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint rejects foreign files and versions", "[params]") {
  auto path = std::filesystem::temp_directory_path() / "gmva_bad_ckpt.bin";
  {
    std::FILE* f = std::fopen(path.string().c_str(), "wb");
    std::fwrite("NOPE", 1, 4, f);
    std::fclose(f);
  }
  CHECK_THROWS_WITH(ParamStore::load(path.string()),
                    Catch::Matchers::ContainsSubstring("not a checkpoint"));
  std::filesystem::remove(path);
}

TEST_CASE("clone is a deep copy", "[params]") {
  ParamStore s(5);
  Value w = s.get("w", 2, 2);
  ParamStore c = s.clone();
  const double before = c.at("w").tensor().data[0];
  w.tensor().data[0] = 1234.5;
  CHECK(c.at("w").tensor().data[0] == before);
}
