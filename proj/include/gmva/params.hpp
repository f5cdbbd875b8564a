#pragma once

// Named learnable parameters, the Adam update with global-norm gradient
// clipping, and the binary checkpoint format.

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "gmva/autodiff.hpp"
#include "gmva/tensor.hpp"

namespace gmva {

enum class Init { kUniform, kZeros, kOnes };

class ParamStore {
 public:
  explicit ParamStore(std::uint64_t seed = 0) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  // Fetch a parameter, creating it on first use. Weights are initialized
  // uniform in +-sqrt(1/fan_in) with fan_in = rows; biases start at zero,
  // layer-norm gains at one. Initialization is a pure function of
  // (seed, path) so creation order does not matter.
  Value get(const std::string& path, int rows, int cols, Init init = Init::kUniform) {
    auto it = params_.find(path);
    if (it != params_.end()) {
      const Tensor& t = it->second.tensor();
      if (t.rows() != rows || t.cols() != cols)
        throw std::logic_error("ParamStore: shape conflict for " + path);
      return it->second;
    }
    Tensor t(rows, cols);
    if (init == Init::kUniform) {
      Rng rng(mix_seed(seed_, fnv1a(path)));
      const double bound = std::sqrt(1.0 / rows);
      for (double& v : t.data) v = rng.uniform(-bound, bound);
    } else if (init == Init::kOnes) {
      t.fill(1.0);
    }
    Value v = Value::param(std::move(t));
    params_.emplace(path, v);
    return v;
  }

  bool has(const std::string& path) const { return params_.count(path) != 0; }

  Value at(const std::string& path) const {
    auto it = params_.find(path);
    if (it == params_.end()) throw std::out_of_range("ParamStore: no parameter " + path);
    return it->second;
  }

  // Sorted by path; deterministic.
  const std::map<std::string, Value>& all() const { return params_; }

  void zero_grads() {
    for (auto& [path, v] : params_) v.node()->ensure_grad().fill(0.0);
  }

  double grad_norm() const {
    double sq = 0.0;
    for (const auto& [path, v] : params_) {
      const Tensor& g = v.node()->ensure_grad();
      for (double x : g.data) sq += x * x;
    }
    return std::sqrt(sq);
  }

  std::size_t total_entries() const {
    std::size_t n = 0;
    for (const auto& [path, v] : params_) n += v.tensor().numel();
    return n;
  }

  // Deep copy (fresh leaf nodes, no shared storage, no optimizer state).
  ParamStore clone() const {
    ParamStore out(seed_);
    for (const auto& [path, v] : params_)
      out.params_.emplace(path, Value::param(v.tensor()));
    return out;
  }

  // One Adam step over every parameter, after clipping the global gradient
  // norm to clip_norm (no clipping when clip_norm <= 0).
  void adam_step(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8,
                 double clip_norm = 5.0) {
    double clip_scale = 1.0;
    if (clip_norm > 0.0) {
      double norm = grad_norm();
      if (norm > clip_norm) clip_scale = clip_norm / norm;
    }
    ++step_count_;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count_));
    for (auto& [path, v] : params_) {
      Tensor& val = v.tensor();
      const Tensor& g = v.node()->ensure_grad();
      AdamSlot& slot = adam_[path];
      if (slot.m.data.size() != val.data.size()) {
        slot.m = Tensor(val.shape);
        slot.v = Tensor(val.shape);
      }
      for (std::size_t i = 0; i < val.data.size(); ++i) {
        const double gi = g.data[i] * clip_scale;
        slot.m.data[i] = beta1 * slot.m.data[i] + (1.0 - beta1) * gi;
        slot.v.data[i] = beta2 * slot.v.data[i] + (1.0 - beta2) * gi * gi;
        const double mhat = slot.m.data[i] / bc1;
        const double vhat = slot.v.data[i] / bc2;
        val.data[i] -= lr * mhat / (std::sqrt(vhat) + eps);
      }
    }
  }

  long long step_count() const { return step_count_; }

  // ---- checkpoint format ----
  // magic "GMVA", u32 version, u32 count, then per parameter:
  //   u32 path length, path bytes, u32 rank, u32 dims..., f64 LE payload.

  void save(const std::string& file) const {
    std::FILE* f = std::fopen(file.c_str(), "wb");
    if (!f) throw std::runtime_error("cannot write checkpoint: " + file);
    std::fwrite("GMVA", 1, 4, f);
    write_u32(f, kFormatVersion);
    write_u32(f, static_cast<std::uint32_t>(params_.size()));
    for (const auto& [path, v] : params_) {
      write_u32(f, static_cast<std::uint32_t>(path.size()));
      std::fwrite(path.data(), 1, path.size(), f);
      const Tensor& t = v.tensor();
      write_u32(f, static_cast<std::uint32_t>(t.shape.size()));
      for (int d : t.shape) write_u32(f, static_cast<std::uint32_t>(d));
      for (double x : t.data) write_f64(f, x);
    }
    std::fclose(f);
  }

  static ParamStore load(const std::string& file) {
    std::FILE* f = std::fopen(file.c_str(), "rb");
    if (!f) throw std::runtime_error("cannot open checkpoint: " + file);
    char magic[4];
    if (std::fread(magic, 1, 4, f) != 4 || std::memcmp(magic, "GMVA", 4) != 0) {
      std::fclose(f);
      throw std::runtime_error("not a checkpoint file: " + file);
    }
    std::uint32_t version = read_u32(f);
    if (version != kFormatVersion) {
      std::fclose(f);
      throw std::runtime_error("unsupported checkpoint version " + std::to_string(version) +
                               " (expected " + std::to_string(kFormatVersion) + ")");
    }
    std::uint32_t count = read_u32(f);
    ParamStore out;
    for (std::uint32_t i = 0; i < count; ++i) {
      std::uint32_t plen = read_u32(f);
      std::string path(plen, '\0');
      if (std::fread(path.data(), 1, plen, f) != plen) {
        std::fclose(f);
        throw std::runtime_error("truncated checkpoint: " + file);
      }
      std::uint32_t rank = read_u32(f);
      std::vector<int> shape(rank);
      for (auto& d : shape) d = static_cast<int>(read_u32(f));
      Tensor t(shape);
      for (double& x : t.data) x = read_f64(f);
      out.params_.emplace(path, Value::param(std::move(t)));
    }
    std::fclose(f);
    return out;
  }

  static constexpr std::uint32_t kFormatVersion = 1;

 private:
  struct AdamSlot {
    Tensor m, v;
  };

  static void write_u32(std::FILE* f, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    std::fwrite(b, 1, 4, f);
  }
  static std::uint32_t read_u32(std::FILE* f) {
    unsigned char b[4];
    if (std::fread(b, 1, 4, f) != 4) throw std::runtime_error("truncated checkpoint");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }
  static void write_f64(std::FILE* f, double x) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
    std::fwrite(b, 1, 8, f);
  }
  static double read_f64(std::FILE* f) {
    unsigned char b[8];
    if (std::fread(b, 1, 8, f) != 8) throw std::runtime_error("truncated checkpoint");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double x;
    std::memcpy(&x, &bits, 8);
    return x;
  }

  std::uint64_t seed_ = 0;
  std::map<std::string, Value> params_;
  std::map<std::string, AdamSlot> adam_;
  long long step_count_ = 0;
};

}  // namespace gmva
