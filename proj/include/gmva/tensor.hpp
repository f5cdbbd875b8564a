#pragma once

// Dense row-major double tensors plus seeded random helpers.
// Everything is value-semantic and 64-bit; shapes stay small enough
// that no BLAS backend is needed.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace gmva {

struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;

  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(numel_of(shape), 0.0);
  }

  Tensor(int rows, int cols) : Tensor(std::vector<int>{rows, cols}) {}

  static std::size_t numel_of(const std::vector<int>& s) {
    std::size_t n = 1;
    for (int d : s) {
      if (d < 0) throw std::invalid_argument("Tensor: negative dimension");
      n *= static_cast<std::size_t>(d);
    }
    return n;
  }

  std::size_t numel() const { return data.size(); }
  bool empty() const { return data.empty(); }

  int rank() const { return static_cast<int>(shape.size()); }

  // 2-D helpers; a rank-1 tensor of length n behaves as a 1 x n row.
  int rows() const {
    if (shape.empty()) return 0;
    return shape.size() == 1 ? 1 : shape[0];
  }
  int cols() const {
    if (shape.empty()) return 0;
    return shape.size() == 1 ? shape[0] : shape.back();
  }

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols() + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols() + c]; }

  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }

  std::string shape_str() const {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
      if (i) os << ", ";
      os << shape[i];
    }
    os << ")";
    return os.str();
  }

  static Tensor from_rows(const std::vector<std::vector<double>>& rows_in) {
    if (rows_in.empty()) return Tensor(0, 0);
    Tensor t(static_cast<int>(rows_in.size()), static_cast<int>(rows_in[0].size()));
    for (std::size_t r = 0; r < rows_in.size(); ++r) {
      if (rows_in[r].size() != rows_in[0].size())
        throw std::invalid_argument("Tensor::from_rows: ragged rows");
      for (std::size_t c = 0; c < rows_in[r].size(); ++c) t.at(static_cast<int>(r), static_cast<int>(c)) = rows_in[r][c];
    }
    return t;
  }

  static Tensor scalar(double v) {
    Tensor t(1, 1);
    t.data[0] = v;
    return t;
  }

  static Tensor identity(int n) {
    Tensor t(n, n);
    for (int i = 0; i < n; ++i) t.at(i, i) = 1.0;
    return t;
  }
};

// Deterministic random source. The engine is the standard-specified
// mt19937_64; conversions to doubles are done by hand so that streams do
// not depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  double uniform01() {
    // 53 random mantissa bits in [0, 1)
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    double u2 = uniform01();
    while (u1 <= 1e-300) u1 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Uniform integer in [0, n)
  std::uint64_t below(std::uint64_t n) {
    // modulo bias is irrelevant at our scales, but rejection keeps it exact
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = eng_();
    while (x >= limit) x = eng_();
    return x % n;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// splitmix64-style mixing for deriving independent stream seeds
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace gmva
