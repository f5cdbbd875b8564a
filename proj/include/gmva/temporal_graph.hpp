#pragma once

// Per-modality dynamic graph over (target, timestep) observation slots.
// Bidirectional temporal edges connect every pair of valid nodes in
// consecutive timesteps (optionally restricted to the same target), and
// each valid node carries a list of nearest same-time spatial neighbors.

#include <algorithm>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "gmva/trajectory.hpp"

namespace gmva {

struct GraphNode {
  int target_index = 0;
  int time_index = 0;
  bool valid = false;
};

struct TemporalGraph {
  int num_targets = 0;
  int num_times = 0;
  std::vector<GraphNode> nodes;                      // target-major: node = target * k + time
  std::vector<std::pair<int, int>> temporal_edges;   // directed (src, dst)
  std::vector<std::vector<int>> temporal_in;         // per node: sources of incoming edges
  std::vector<std::vector<int>> spatial_neighbors;   // per node: valid same-time neighbors

  int node_index(int target, int time) const { return target * num_times + time; }
  int num_nodes() const { return static_cast<int>(nodes.size()); }
};

inline TemporalGraph build_graph(const ObservationSet& obs, int spatial_k,
                                 bool same_target_only = false) {
  TemporalGraph g;
  g.num_targets = obs.num_targets();
  g.num_times = obs.length();
  const int n = g.num_targets * g.num_times;
  g.nodes.resize(n);
  g.temporal_in.resize(n);
  g.spatial_neighbors.resize(n);

  for (int i = 0; i < g.num_targets; ++i)
    for (int t = 0; t < g.num_times; ++t)
      g.nodes[g.node_index(i, t)] = {i, t, obs.observed(i, t)};

  // valid nodes per timestep, ascending target index
  std::vector<std::vector<int>> valid_at(g.num_times);
  for (int t = 0; t < g.num_times; ++t)
    for (int i = 0; i < g.num_targets; ++i)
      if (obs.observed(i, t)) valid_at[t].push_back(g.node_index(i, t));

  for (int t = 1; t < g.num_times; ++t) {
    for (int u : valid_at[t - 1])
      for (int v : valid_at[t]) {
        if (same_target_only && g.nodes[u].target_index != g.nodes[v].target_index) continue;
        g.temporal_edges.emplace_back(u, v);
        g.temporal_edges.emplace_back(v, u);
        g.temporal_in[v].push_back(u);
        g.temporal_in[u].push_back(v);
      }
  }

  // k nearest valid same-time neighbors; distance ties break toward the
  // lower target index
  for (int t = 0; t < g.num_times; ++t) {
    const auto& peers = valid_at[t];
    for (int u : peers) {
      const int ui = g.nodes[u].target_index;
      std::vector<std::pair<double, int>> cand;
      for (int v : peers) {
        if (v == u) continue;
        const int vi = g.nodes[v].target_index;
        double dx = obs.x(ui, t) - obs.x(vi, t);
        double dy = obs.y(ui, t) - obs.y(vi, t);
        cand.emplace_back(dx * dx + dy * dy, vi);
      }
      std::sort(cand.begin(), cand.end());
      const int take = spatial_k > 0 ? std::min<int>(spatial_k, static_cast<int>(cand.size()))
                                     : static_cast<int>(cand.size());
      for (int c = 0; c < take; ++c)
        g.spatial_neighbors[u].push_back(g.node_index(cand[c].second, t));
    }
  }
  return g;
}

// Incoming temporal neighbors plus the node itself; empty for invalid nodes.
inline std::vector<int> temporal_neighbors(const TemporalGraph& g, int node) {
  if (node < 0 || node >= g.num_nodes() || !g.nodes[node].valid) return {};
  std::vector<int> out;
  out.reserve(g.temporal_in[node].size() + 1);
  out = g.temporal_in[node];
  out.push_back(node);
  std::sort(out.begin(), out.end());
  return out;
}

// Plain-text edge list: "src_target,src_time -> dst_target,dst_time" lines.
inline std::string dump_edges(const TemporalGraph& g) {
  std::ostringstream os;
  for (const auto& [u, v] : g.temporal_edges)
    os << g.nodes[u].target_index << "," << g.nodes[u].time_index << " -> "
       << g.nodes[v].target_index << "," << g.nodes[v].time_index << "\n";
  return os.str();
}

}  // namespace gmva
