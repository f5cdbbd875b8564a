#pragma once

// The learned feature extractor: coordinate embedding, temporal graph
// attention layers, and the spatial-temporal attention block with FFN
// fusion. Both sensor streams run through the same (shared) parameters.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "gmva/autodiff.hpp"
#include "gmva/params.hpp"
#include "gmva/temporal_graph.hpp"
#include "gmva/trajectory.hpp"

namespace gmva {

struct NetConfig {
  int d = 64;           // feature dimension
  int heads = 4;        // attention heads K
  int tga_layers = 2;   // stacked temporal graph attention layers
  int ffn_hidden = 128;
  int spatial_k = 8;    // nearest same-time neighbors
  bool same_target_only = false;
  bool additive_spatial = false;  // additive tanh scoring instead of dot product
  bool use_tga = true;
  bool use_sta = true;

  int head_dim() const { return d / heads; }

  void validate() const {
    if (d <= 0 || heads <= 0 || tga_layers < 0 || ffn_hidden <= 0)
      throw std::invalid_argument("NetConfig: sizes must be positive");
    if (d % heads != 0)
      throw std::invalid_argument("NetConfig: d (" + std::to_string(d) +
                                  ") must be divisible by heads (" + std::to_string(heads) + ")");
    if (!use_tga && !use_sta)
      throw std::invalid_argument("NetConfig: at least one of TGA / STA must stay enabled");
  }
};

struct NodeFeatures {
  Value values;  // (num_nodes, d), invalid rows exactly zero
  int num_targets = 0;
  int num_times = 0;

  int row(int target, int time) const { return target * num_times + time; }
};

// Optional capture of attention weight matrices for inspection/testing.
struct AttentionTrace {
  struct Entry {
    std::string name;
    Tensor weights;                   // (n x n), rows softmaxed over the mask
    std::vector<std::uint8_t> mask;   // neighborhood structure used
  };
  std::vector<Entry> entries;
};

namespace detail {

inline std::vector<std::uint8_t> valid_mask(const TemporalGraph& g) {
  std::vector<std::uint8_t> keep(g.num_nodes());
  for (int i = 0; i < g.num_nodes(); ++i) keep[i] = g.nodes[i].valid ? 1 : 0;
  return keep;
}

// (n x n) adjacency of temporal neighborhoods including self; invalid rows empty.
inline std::vector<std::uint8_t> temporal_att_mask(const TemporalGraph& g) {
  const int n = g.num_nodes();
  std::vector<std::uint8_t> m(static_cast<std::size_t>(n) * n, 0);
  for (int i = 0; i < n; ++i) {
    if (!g.nodes[i].valid) continue;
    m[static_cast<std::size_t>(i) * n + i] = 1;
    for (int j : g.temporal_in[i]) m[static_cast<std::size_t>(i) * n + j] = 1;
  }
  return m;
}

// (n x n) adjacency of spatial neighborhoods, self excluded; rows may be empty.
inline std::vector<std::uint8_t> spatial_att_mask(const TemporalGraph& g) {
  const int n = g.num_nodes();
  std::vector<std::uint8_t> m(static_cast<std::size_t>(n) * n, 0);
  for (int i = 0; i < n; ++i)
    for (int j : g.spatial_neighbors[i]) m[static_cast<std::size_t>(i) * n + j] = 1;
  return m;
}

inline void record(AttentionTrace* trace, const std::string& name, const Value& beta,
                   const std::vector<std::uint8_t>& mask) {
  if (!trace) return;
  trace->entries.push_back({name, beta.tensor(), mask});
}

}  // namespace detail

// Per-node input embedding: W_e (x, y, sin 2*pi*tau, cos 2*pi*tau) + b_e with
// tau = time_index / k. Invalid nodes stay exactly zero.
inline NodeFeatures embed(const ObservationSet& obs, const TemporalGraph& g, ParamStore& params,
                          const NetConfig& cfg) {
  const int n = g.num_nodes();
  const int k = g.num_times;
  Tensor x(n, 4);
  for (int node = 0; node < n; ++node) {
    if (!g.nodes[node].valid) continue;
    const int ti = g.nodes[node].target_index;
    const int tt = g.nodes[node].time_index;
    const double tau = k > 0 ? static_cast<double>(tt) / k : 0.0;
    x.at(node, 0) = obs.x(ti, tt);
    x.at(node, 1) = obs.y(ti, tt);
    x.at(node, 2) = std::sin(2.0 * 3.14159265358979323846 * tau);
    x.at(node, 3) = std::cos(2.0 * 3.14159265358979323846 * tau);
  }
  Value we = params.get("net.embed.w", 4, cfg.d);
  Value be = params.get("net.embed.b", 1, cfg.d, Init::kZeros);
  Value out = mask_rows(add_rowvec(matmul(Value::constant(std::move(x)), we), be),
                        detail::valid_mask(g));
  return {out, g.num_targets, g.num_times};
}

// h_i <- ReLU((1/K) sum_k sum_{j in T(i)} beta_ij^k W^k h_j); heads are
// averaged, not concatenated.
inline NodeFeatures tga_layer(const TemporalGraph& g, const NodeFeatures& h_in, ParamStore& params,
                              const NetConfig& cfg, int layer, AttentionTrace* trace = nullptr) {
  const int dk = cfg.head_dim();
  const auto tmask = detail::temporal_att_mask(g);
  const std::string base = "net.tga" + std::to_string(layer) + ".h";
  Value acc;
  for (int head = 0; head < cfg.heads; ++head) {
    const std::string hp = base + std::to_string(head);
    Value q = matmul(h_in.values, params.get(hp + ".wq", cfg.d, dk));
    Value kk = matmul(h_in.values, params.get(hp + ".wk", cfg.d, dk));
    Value scores = scale(matmul(q, transpose(kk)), 1.0 / std::sqrt(static_cast<double>(dk)));
    Value beta = masked_softmax_rows(scores, tmask);
    detail::record(trace, "tga" + std::to_string(layer) + ".beta" + std::to_string(head), beta,
                   tmask);
    Value v = matmul(h_in.values, params.get(hp + ".wv", cfg.d, cfg.d));
    Value mixed = matmul(beta, v);
    acc = acc.defined() ? add(acc, mixed) : mixed;
  }
  Value out = mask_rows(relu(scale(acc, 1.0 / cfg.heads)), detail::valid_mask(g));
  return {out, h_in.num_targets, h_in.num_times};
}

// Multi-head temporal attention: per-head weighted sums over T(i), heads
// concatenated then projected by W_O. No nonlinearity.
inline NodeFeatures sta_temporal(const TemporalGraph& g, const NodeFeatures& h, ParamStore& params,
                                 const NetConfig& cfg, AttentionTrace* trace = nullptr) {
  const int dk = cfg.head_dim();
  const auto tmask = detail::temporal_att_mask(g);
  std::vector<Value> heads;
  heads.reserve(cfg.heads);
  for (int head = 0; head < cfg.heads; ++head) {
    const std::string hp = "net.stat.h" + std::to_string(head);
    Value q = matmul(h.values, params.get(hp + ".wq", cfg.d, dk));
    Value kk = matmul(h.values, params.get(hp + ".wk", cfg.d, dk));
    Value scores = scale(matmul(q, transpose(kk)), 1.0 / std::sqrt(static_cast<double>(dk)));
    Value beta = masked_softmax_rows(scores, tmask);
    detail::record(trace, "stat.beta" + std::to_string(head), beta, tmask);
    heads.push_back(matmul(beta, matmul(h.values, params.get(hp + ".wv", cfg.d, dk))));
  }
  Value cat = concat_last(heads);
  Value out = mask_rows(matmul(cat, params.get("net.stat.wo", cfg.d, cfg.d)),
                        detail::valid_mask(g));
  return {out, h.num_targets, h.num_times};
}

// Spatial attention over same-time neighbors with residual + layer norm.
// Nodes with empty neighborhoods reduce to LN(h_i).
inline NodeFeatures sta_spatial(const TemporalGraph& g, const NodeFeatures& h, ParamStore& params,
                                const NetConfig& cfg, AttentionTrace* trace = nullptr) {
  const auto smask = detail::spatial_att_mask(g);
  Value q = matmul(h.values, params.get("net.stas.wq", cfg.d, cfg.d));
  Value kk = matmul(h.values, params.get("net.stas.wk", cfg.d, cfg.d));
  Value scores;
  if (cfg.additive_spatial) {
    Value av = params.get("net.stas.av", cfg.d, 1);
    scores = additive_scores(q, kk, av);
  } else {
    scores = scale(matmul(q, transpose(kk)), 1.0 / std::sqrt(static_cast<double>(cfg.d)));
  }
  Value alpha = masked_softmax_rows(scores, smask);
  detail::record(trace, "stas.alpha", alpha, smask);
  Value agg = matmul(alpha, matmul(h.values, params.get("net.stas.ws", cfg.d, cfg.d)));
  Value pre = add(agg, h.values);
  Value gain = params.get("net.stas.ln.g", 1, cfg.d, Init::kOnes);
  Value bias = params.get("net.stas.ln.b", 1, cfg.d, Init::kZeros);
  Value out = mask_rows(layer_norm(pre, gain, bias), detail::valid_mask(g));
  return {out, h.num_targets, h.num_times};
}

// h^f = FFN(LN([h^t || h^s])) + h^t + h^s with FFN(x) = W2 ReLU(W1 x + b1) + b2.
inline NodeFeatures sta_fuse(const TemporalGraph& g, const NodeFeatures& h_t,
                             const NodeFeatures& h_s, ParamStore& params, const NetConfig& cfg) {
  Value cat = concat_last({h_t.values, h_s.values});
  Value gain = params.get("net.fuse.ln.g", 1, 2 * cfg.d, Init::kOnes);
  Value bias = params.get("net.fuse.ln.b", 1, 2 * cfg.d, Init::kZeros);
  Value normed = layer_norm(cat, gain, bias);
  Value f1 = relu(add_rowvec(matmul(normed, params.get("net.fuse.w1", 2 * cfg.d, cfg.ffn_hidden)),
                             params.get("net.fuse.b1", 1, cfg.ffn_hidden, Init::kZeros)));
  Value f2 = add_rowvec(matmul(f1, params.get("net.fuse.w2", cfg.ffn_hidden, cfg.d)),
                        params.get("net.fuse.b2", 1, cfg.d, Init::kZeros));
  Value out = mask_rows(add(add(f2, h_t.values), h_s.values), detail::valid_mask(g));
  return {out, h_t.num_targets, h_t.num_times};
}

// Full extractor: embed -> TGA stack -> (temporal || spatial) -> fuse.
// Ablation flags can drop either attention family but not both.
inline NodeFeatures extract_features(const ObservationSet& obs, ParamStore& params,
                                     const NetConfig& cfg, AttentionTrace* trace = nullptr) {
  cfg.validate();
  TemporalGraph g = build_graph(obs, cfg.spatial_k, cfg.same_target_only);
  NodeFeatures h = embed(obs, g, params, cfg);
  if (cfg.use_tga)
    for (int l = 0; l < cfg.tga_layers; ++l) h = tga_layer(g, h, params, cfg, l, trace);
  if (cfg.use_sta) {
    NodeFeatures ht = sta_temporal(g, h, params, cfg, trace);
    NodeFeatures hs = sta_spatial(g, h, params, cfg, trace);
    h = sta_fuse(g, ht, hs, params, cfg);
  }
  return h;
}

}  // namespace gmva
