#pragma once

// File formats: JSON-lines track files, scenario directories, matching
// output JSON, affine transform JSON, run-history and results CSV, and
// the checkpoint JSON sidecar.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gmva/fusion.hpp"
#include "gmva/losses.hpp"
#include "gmva/network.hpp"
#include "gmva/simulator.hpp"
#include "gmva/train.hpp"
#include "gmva/trajectory.hpp"

namespace gmva {

using nlohmann::json;

// ---- track JSONL: {"id": str, "modality": "A"|"B", "t": int, "x": f, "y": f}

inline void save_tracks_jsonl(const std::string& path, const std::vector<RawTrack>& tracks) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& tr : tracks)
    for (const auto& p : tr.points) {
      json j{{"id", tr.target_id},
             {"modality", modality_name(tr.modality)},
             {"t", p.t},
             {"x", p.x},
             {"y", p.y}};
      out << j.dump() << "\n";
    }
}

inline std::vector<RawTrack> load_tracks_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::map<std::string, RawTrack> by_id;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    const std::string id = j.at("id").get<std::string>();
    auto& tr = by_id[id];
    if (tr.points.empty()) {
      tr.target_id = id;
      tr.modality = j.at("modality").get<std::string>() == "B" ? Modality::B : Modality::A;
    }
    tr.points.push_back({j.at("t").get<std::int64_t>(), j.at("x").get<double>(),
                         j.at("y").get<double>()});
  }
  std::vector<RawTrack> out;
  out.reserve(by_id.size());
  for (auto& [id, tr] : by_id) {
    std::sort(tr.points.begin(), tr.points.end(),
              [](const TrackPoint& a, const TrackPoint& b) { return a.t < b.t; });
    out.push_back(std::move(tr));
  }
  return out;
}

// ---- affine transform JSON: {"w": [[..],[..]], "b": [..]}

inline json affine_to_json(const AffineTransform2D& tf) {
  return json{{"w", {{tf.w[0][0], tf.w[0][1]}, {tf.w[1][0], tf.w[1][1]}}},
              {"b", {tf.b[0], tf.b[1]}}};
}

inline AffineTransform2D affine_from_json(const json& j) {
  AffineTransform2D tf;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) tf.w[r][c] = j.at("w").at(r).at(c).get<double>();
  tf.b[0] = j.at("b").at(0).get<double>();
  tf.b[1] = j.at("b").at(1).get<double>();
  return tf;
}

inline json bounds_to_json(const Bounds& b) {
  return json{{"min_x", b.min_x}, {"min_y", b.min_y}, {"max_x", b.max_x}, {"max_y", b.max_y}};
}

inline Bounds bounds_from_json(const json& j) {
  return Bounds{j.at("min_x").get<double>(), j.at("min_y").get<double>(),
                j.at("max_x").get<double>(), j.at("max_y").get<double>()};
}

// ---- scenario spec JSON

inline json spec_to_json(const ScenarioSpec& s) {
  return json{{"n_vessels", s.n_vessels},
              {"duration", s.duration},
              {"sample_period", s.sample_period},
              {"channel", bounds_to_json(s.channel)},
              {"speed_min", s.speed_min},
              {"speed_max", s.speed_max},
              {"turn_rate_std", s.turn_rate_std},
              {"ais_dropout_p", s.ais_dropout_p},
              {"pixel_noise_std", s.pixel_noise_std},
              {"camera_transform", affine_to_json(s.camera_transform)},
              {"occlusion_radius", s.occlusion_radius},
              {"missing_targets", s.missing_targets},
              {"missing_modality", missing_modality_name(s.missing_modality)},
              {"seed", s.seed}};
}

inline ScenarioSpec spec_from_json(const json& j) {
  ScenarioSpec s;
  s.n_vessels = j.at("n_vessels").get<int>();
  s.duration = j.at("duration").get<std::int64_t>();
  s.sample_period = j.at("sample_period").get<std::int64_t>();
  s.channel = bounds_from_json(j.at("channel"));
  s.speed_min = j.at("speed_min").get<double>();
  s.speed_max = j.at("speed_max").get<double>();
  s.turn_rate_std = j.at("turn_rate_std").get<double>();
  s.ais_dropout_p = j.at("ais_dropout_p").get<double>();
  s.pixel_noise_std = j.at("pixel_noise_std").get<double>();
  s.camera_transform = affine_from_json(j.at("camera_transform"));
  s.occlusion_radius = j.at("occlusion_radius").get<double>();
  s.missing_targets = j.at("missing_targets").get<int>();
  s.missing_modality = missing_modality_from_name(j.at("missing_modality").get<std::string>());
  s.seed = j.at("seed").get<std::uint64_t>();
  return s;
}

// ---- scenario directory: tracks_a.jsonl, tracks_b.jsonl, truth.json, spec.json

inline void save_scenario(const std::string& dir, const Scenario& sc) {
  std::filesystem::create_directories(dir);
  save_tracks_jsonl(dir + "/tracks_a.jsonl", sc.tracks_a);
  save_tracks_jsonl(dir + "/tracks_b.jsonl", sc.tracks_b);

  json truth;
  truth["pairs"] = json::array();
  for (const auto& [a, b] : sc.truth.pairs) truth["pairs"].push_back(json{{"a", a}, {"b", b}});
  truth["deleted_ids"] = sc.deleted_ids;
  std::ofstream tf(dir + "/truth.json");
  if (!tf) throw std::runtime_error("cannot write " + dir + "/truth.json");
  tf << truth.dump(2) << "\n";

  json spec = spec_to_json(sc.spec);
  spec["bounds"] = bounds_to_json(sc.bounds);
  std::ofstream sf(dir + "/spec.json");
  if (!sf) throw std::runtime_error("cannot write " + dir + "/spec.json");
  sf << spec.dump(2) << "\n";
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  in >> j;
  return j;
}

inline Scenario load_scenario(const std::string& dir) {
  Scenario sc;
  sc.tracks_a = load_tracks_jsonl(dir + "/tracks_a.jsonl");
  sc.tracks_b = load_tracks_jsonl(dir + "/tracks_b.jsonl");
  json truth = load_json_file(dir + "/truth.json");
  for (const auto& p : truth.at("pairs"))
    sc.truth.pairs.emplace_back(p.at("a").get<std::string>(), p.at("b").get<std::string>());
  if (truth.contains("deleted_ids"))
    sc.deleted_ids = truth.at("deleted_ids").get<std::vector<std::string>>();
  json spec = load_json_file(dir + "/spec.json");
  sc.spec = spec_from_json(spec);
  if (spec.contains("bounds")) {
    sc.bounds = bounds_from_json(spec.at("bounds"));
  } else {
    sc.bounds = Bounds::of_tracks(sc.tracks_a).expanded(0.05);
  }
  return sc;
}

// ---- per-window matching JSON

inline json matching_to_json(const MatchingMatrix& m, const ObservationSet& obs_a,
                             const ObservationSet& obs_b, const Tensor* scores) {
  json j;
  j["pairs"] = json::array();
  for (const auto& [i, jdx] : m.pairs) {
    json p{{"a", obs_a.ids[i]}, {"b", obs_b.ids[jdx]}};
    p["score"] = scores ? scores->at(i, jdx) : 0.0;
    j["pairs"].push_back(p);
  }
  j["unmatched_a"] = json::array();
  for (int i : m.unmatched_a) j["unmatched_a"].push_back(obs_a.ids[i]);
  j["unmatched_b"] = json::array();
  for (int i : m.unmatched_b) j["unmatched_b"].push_back(obs_b.ids[i]);
  return j;
}

// ---- CSV

struct ResultRow {
  std::string scenario;
  std::string method;
  std::string density;
  int missing = 0;
  double accuracy = 0.0;
  double seconds = 0.0;
};

inline void save_history_csv(const std::string& path, const std::vector<EpochStats>& history) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "epoch,train_loss,val_loss,val_acc\n";
  char buf[160];
  for (const auto& h : history) {
    std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g,%.6f\n", h.epoch, h.train_loss, h.val_loss,
                  h.val_acc);
    out << buf;
  }
}

inline void save_results_csv(const std::string& path, const std::vector<ResultRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "scenario,method,density,missing,accuracy,seconds\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%s,%d,%.6f,%.4f\n", r.scenario.c_str(),
                  r.method.c_str(), r.density.c_str(), r.missing, r.accuracy, r.seconds);
    out << buf;
  }
}

// Throws with the offending line number on malformed input.
inline std::vector<ResultRow> load_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::size_t lineno = 0;
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (lineno == 1) {
      if (line.rfind("scenario,", 0) != 0)
        throw std::runtime_error(path + ":1: expected results header");
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected 6 columns, got " +
                               std::to_string(cells.size()));
    ResultRow r;
    r.scenario = cells[0];
    r.method = cells[1];
    r.density = cells[2];
    try {
      r.missing = std::stoi(cells[3]);
      r.accuracy = std::stod(cells[4]);
      r.seconds = std::stod(cells[5]);
    } catch (const std::exception&) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": malformed numeric cell");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---- checkpoint sidecar

inline json net_config_to_json(const NetConfig& c) {
  return json{{"d", c.d},
              {"heads", c.heads},
              {"tga_layers", c.tga_layers},
              {"ffn_hidden", c.ffn_hidden},
              {"spatial_k", c.spatial_k},
              {"same_target_only", c.same_target_only},
              {"additive_spatial", c.additive_spatial},
              {"use_tga", c.use_tga},
              {"use_sta", c.use_sta}};
}

inline NetConfig net_config_from_json(const json& j) {
  NetConfig c;
  c.d = j.at("d").get<int>();
  c.heads = j.at("heads").get<int>();
  c.tga_layers = j.at("tga_layers").get<int>();
  c.ffn_hidden = j.at("ffn_hidden").get<int>();
  c.spatial_k = j.at("spatial_k").get<int>();
  c.same_target_only = j.at("same_target_only").get<bool>();
  c.additive_spatial = j.at("additive_spatial").get<bool>();
  c.use_tga = j.at("use_tga").get<bool>();
  c.use_sta = j.at("use_sta").get<bool>();
  return c;
}

inline json train_config_to_json(const TrainConfig& c) {
  return json{{"epochs", c.epochs},
              {"lr", c.lr},
              {"gamma1", c.gamma1},
              {"gamma2", c.gamma2},
              {"margin", c.margin},
              {"clip_norm", c.clip_norm},
              {"seed", c.seed},
              {"val_fraction", c.val_fraction},
              {"literal_contrastive", c.literal_contrastive}};
}

inline TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.epochs = j.at("epochs").get<int>();
  c.lr = j.at("lr").get<double>();
  c.gamma1 = j.at("gamma1").get<double>();
  c.gamma2 = j.at("gamma2").get<double>();
  c.margin = j.at("margin").get<double>();
  c.clip_norm = j.at("clip_norm").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.val_fraction = j.at("val_fraction").get<double>();
  c.literal_contrastive = j.at("literal_contrastive").get<bool>();
  return c;
}

struct CheckpointMeta {
  NetConfig net;
  TrainConfig train;
  int window_k = 6;
  double tau = 0.5;
  std::uint64_t rng_seed = 0;
};

inline void save_checkpoint_meta(const std::string& path, const CheckpointMeta& m) {
  json j{{"format_version", 1},
         {"net", net_config_to_json(m.net)},
         {"train", train_config_to_json(m.train)},
         {"window_k", m.window_k},
         {"tau", m.tau},
         {"rng_seed", m.rng_seed}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

inline CheckpointMeta load_checkpoint_meta(const std::string& path) {
  json j = load_json_file(path);
  CheckpointMeta m;
  m.net = net_config_from_json(j.at("net"));
  m.train = train_config_from_json(j.at("train"));
  m.window_k = j.at("window_k").get<int>();
  m.tau = j.at("tau").get<double>();
  m.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  return m;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace gmva
