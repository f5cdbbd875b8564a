// Command-line front end: scenario simulation, training, association,
// evaluation sweeps, ablations and report plots.
//
// Exit codes: 0 success, 2 usage/input error, 3 numeric divergence.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gmva/io.hpp"
#include "gmva/pipeline.hpp"
#include "gmva/svg.hpp"
#include "gmva/train.hpp"

namespace fs = std::filesystem;
using namespace gmva;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitDiverged = 3;

struct RunConfig {
  NetConfig net;
  TrainConfig train;
  int window_k = 6;
  int stride = 1;
  double tau = 0.5;
};

RunConfig load_run_config(const std::string& path) {
  json j = load_json_file(path);
  RunConfig c;
  if (j.contains("net")) c.net = net_config_from_json(j.at("net"));
  if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
  if (j.contains("window_k")) c.window_k = j.at("window_k").get<int>();
  if (j.contains("stride")) c.stride = j.at("stride").get<int>();
  if (j.contains("tau")) c.tau = j.at("tau").get<double>();
  return c;
}

json run_config_to_json(const RunConfig& c) {
  return json{{"net", net_config_to_json(c.net)},
              {"train", train_config_to_json(c.train)},
              {"window_k", c.window_k},
              {"stride", c.stride},
              {"tau", c.tau}};
}

// --config FILE must take effect before the other flags bind their
// defaults, so it is scanned ahead of CLI11.
std::string prescan_config(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--config") return argv[i + 1];
  return "";
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  for (const auto& item : split_csv(s)) out.push_back(std::stoi(item));
  return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
  std::vector<std::uint64_t> out;
  for (const auto& item : split_csv(s)) out.push_back(std::stoull(item));
  return out;
}

std::string scenario_cell_name(DensityLevel d, int missing, std::uint64_t seed) {
  std::ostringstream os;
  os << density_name(d) << "_m" << missing << "_s" << seed;
  return os.str();
}

Scenario build_cell_scenario(DensityLevel density, int missing, std::uint64_t seed) {
  ScenarioSpec spec = density_preset(density, seed);
  spec.missing_targets = missing;
  return simulate(spec);
}

struct LoadedCheckpoint {
  ParamStore params;
  CheckpointMeta meta;
};

LoadedCheckpoint load_full_checkpoint(const std::string& bin_path) {
  LoadedCheckpoint c{ParamStore::load(bin_path), {}};
  fs::path meta = fs::path(bin_path).replace_extension(".json");
  c.meta = load_checkpoint_meta(meta.string());
  return c;
}

void write_checkpoint(const std::string& dir, const ParamStore& params,
                      const CheckpointMeta& meta) {
  params.save((fs::path(dir) / "checkpoint.bin").string());
  save_checkpoint_meta((fs::path(dir) / "checkpoint.json").string(), meta);
}

// ---- simulate ----

int cmd_simulate(const std::string& preset, const std::string& spec_file, std::uint64_t seed,
                 int vessels, std::int64_t duration, int missing,
                 const std::string& missing_modality, double pixel_noise, double dropout,
                 double occlusion, bool identity_camera, const std::string& out_dir,
                 const CLI::App* sub) {
  ScenarioSpec spec;
  if (!spec_file.empty()) {
    spec = spec_from_json(load_json_file(spec_file));
  } else {
    spec = density_preset(density_from_name(preset), seed);
  }
  if (sub->count("--seed")) spec.seed = seed;
  if (sub->count("--vessels")) spec.n_vessels = vessels;
  if (sub->count("--duration")) spec.duration = duration;
  if (sub->count("--missing")) spec.missing_targets = missing;
  if (sub->count("--missing-modality"))
    spec.missing_modality = missing_modality_from_name(missing_modality);
  if (sub->count("--pixel-noise")) spec.pixel_noise_std = pixel_noise;
  if (sub->count("--dropout")) spec.ais_dropout_p = dropout;
  if (sub->count("--occlusion")) spec.occlusion_radius = occlusion;
  if (identity_camera) spec.camera_transform = AffineTransform2D::identity();

  Scenario sc = simulate(spec);
  save_scenario(out_dir, sc);

  auto windows = prepare_windows(sc, 6, 6);
  std::printf("scenario %s: %d vessels, %zu/%zu tracks (A/B), %zu windows, %zu deleted ids\n",
              out_dir.c_str(), spec.n_vessels, sc.tracks_a.size(), sc.tracks_b.size(),
              windows.size(), sc.deleted_ids.size());
  return kExitOk;
}

// ---- train ----

int cmd_train(const RunConfig& cfg, const std::vector<std::string>& scenario_dirs,
              const std::string& out_dir) {
  if (scenario_dirs.empty()) throw std::invalid_argument("train: need at least one --scenario");
  cfg.net.validate();
  cfg.train.validate();

  std::vector<Scenario> scenarios;
  for (const auto& dir : scenario_dirs) scenarios.push_back(load_scenario(dir));
  auto dataset = make_dataset(scenarios, cfg.window_k, cfg.stride);
  if (dataset.empty()) throw std::invalid_argument("train: scenarios yielded no windows");

  TrainResult result = train(dataset, cfg.net, cfg.train, cfg.tau);

  fs::create_directories(out_dir);
  CheckpointMeta meta{cfg.net, cfg.train, cfg.window_k, cfg.tau, cfg.train.seed};
  write_checkpoint(out_dir, result.best, meta);
  save_history_csv((fs::path(out_dir) / "history.csv").string(), result.history);
  write_text_file((fs::path(out_dir) / "effective_config.json").string(),
                  run_config_to_json(cfg).dump(2) + "\n");

  if (!result.history.empty()) {
    const auto& last = result.history.back();
    std::printf("trained %d epochs on %zu windows: train_loss %.6g, val_loss %.6g, val_acc "
                "%.2f%% (best epoch %d)\n",
                cfg.train.epochs, dataset.size(), last.train_loss, last.val_loss, last.val_acc,
                result.best_epoch);
  }
  return kExitOk;
}

// ---- associate ----

int cmd_associate(const std::string& checkpoint, const std::string& scenario_dir,
                  const std::string& method, int window_index, bool all_windows, double tau_flag,
                  bool tau_given, int k_flag, bool k_given, const std::string& out_dir) {
  Scenario sc = load_scenario(scenario_dir);

  ParamStore params;
  NetConfig net;
  int k = 6;
  double tau = 0.5;
  if (method == "gmva") {
    if (checkpoint.empty())
      throw std::invalid_argument("associate: --checkpoint required for the gmva method");
    LoadedCheckpoint ck = load_full_checkpoint(checkpoint);
    params = std::move(ck.params);
    net = ck.meta.net;
    k = ck.meta.window_k;
    tau = ck.meta.tau;
    if (k_given && k_flag != k)
      throw std::invalid_argument("associate: window length mismatch: checkpoint has k=" +
                                  std::to_string(k) + ", requested k=" + std::to_string(k_flag));
  } else if (k_given) {
    k = k_flag;
  }
  if (tau_given) tau = tau_flag;

  auto windows = prepare_windows(sc, k, k);
  if (windows.empty()) throw std::invalid_argument("associate: scenario yields no windows");
  fs::create_directories(out_dir);

  double acc_sum = 0.0;
  int acc_count = 0;
  for (std::size_t w = 0; w < windows.size(); ++w) {
    if (!all_windows && static_cast<int>(w) != window_index) continue;
    const auto& wp = windows[w];
    MatchingMatrix m;
    Tensor scores;
    if (method == "gmva") {
      SimilarityMatrix sim;
      m = associate_window(wp, params, net, tau, &sim);
      scores = sim.scores;
    } else {
      BaselineMethod bm = baseline_from_name(method);
      m = baseline_match(wp.a, wp.b, bm);
      auto costs = baseline_costs(wp.a, wp.b, bm);
      scores = Tensor(m.n, m.n);
      for (int i = 0; i < m.n; ++i)
        for (int j = 0; j < m.n; ++j)
          scores.at(i, j) = std::isinf(costs[i][j]) ? 0.0 : -costs[i][j];
    }
    char name[32];
    std::snprintf(name, sizeof(name), "matching_%03zu.json", w);
    json j = matching_to_json(m, wp.a, wp.b, &scores);
    if (!wp.truth.pairs.empty()) {
      double acc = accuracy(m, wp.a, wp.b, wp.truth);
      j["accuracy"] = acc;
      acc_sum += acc;
      ++acc_count;
      std::printf("window %zu: %zu pairs, accuracy %.2f%%\n", w, m.pairs.size(), acc);
    } else {
      std::printf("window %zu: %zu pairs (no ground truth)\n", w, m.pairs.size());
    }
    write_text_file((fs::path(out_dir) / name).string(), j.dump(2) + "\n");
  }
  if (acc_count > 0)
    std::printf("mean accuracy over %d windows: %.2f%%\n", acc_count, acc_sum / acc_count);
  return kExitOk;
}

// ---- sweep ----

int cmd_sweep(const std::string& checkpoint, const std::string& densities_s,
              const std::string& missing_s, const std::string& seeds_s,
              const std::string& methods_s, const std::string& out_dir) {
  std::vector<DensityLevel> densities;
  for (const auto& d : split_csv(densities_s)) densities.push_back(density_from_name(d));
  std::vector<int> missing = parse_int_list(missing_s);
  std::vector<std::uint64_t> seeds = parse_seed_list(seeds_s);
  std::vector<std::string> methods = split_csv(methods_s);
  if (densities.empty() || missing.empty() || seeds.empty() || methods.empty())
    throw std::invalid_argument("sweep: empty grid axis");

  ParamStore params;
  NetConfig net;
  int k = 6;
  double tau = 0.5;
  bool have_model =
      std::find(methods.begin(), methods.end(), std::string("gmva")) != methods.end();
  if (have_model) {
    if (checkpoint.empty())
      throw std::invalid_argument("sweep: --checkpoint required when methods include gmva");
    LoadedCheckpoint ck = load_full_checkpoint(checkpoint);
    params = std::move(ck.params);
    net = ck.meta.net;
    k = ck.meta.window_k;
    tau = ck.meta.tau;
  }

  struct Cell {
    DensityLevel density;
    int missing;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (auto d : densities)
    for (int m : missing)
      for (auto s : seeds) cells.push_back({d, m, s});

  std::vector<std::vector<ResultRow>> rows_per_cell(cells.size());
  parallel_for(static_cast<int>(cells.size()), env_thread_cap(), [&](int ci) {
    const Cell& cell = cells[ci];
    Scenario sc = build_cell_scenario(cell.density, cell.missing, cell.seed);
    auto windows = prepare_windows(sc, k, k);
    const std::string name = scenario_cell_name(cell.density, cell.missing, cell.seed);
    for (const auto& method : methods) {
      EvalResult r;
      if (method == "gmva") {
        // copy-free reads only; ParamStore is shared read-only here
        r = evaluate_model(windows, params, net, tau);
      } else {
        r = evaluate_baseline(windows, baseline_from_name(method));
      }
      rows_per_cell[ci].push_back(
          {name, method, density_name(cell.density), cell.missing, r.mean_accuracy, r.seconds});
    }
  });

  std::vector<ResultRow> rows;
  for (auto& cr : rows_per_cell) rows.insert(rows.end(), cr.begin(), cr.end());
  fs::create_directories(out_dir);
  save_results_csv((fs::path(out_dir) / "results.csv").string(), rows);

  // summary: mean accuracy per method over seeds, one table per density
  std::ostringstream md;
  md << "# Sweep summary\n";
  for (auto d : densities) {
    md << "\n## density: " << density_name(d) << "\n\n| method |";
    for (int m : missing) md << " missing " << m << " |";
    md << "\n|---|";
    for (std::size_t i = 0; i < missing.size(); ++i) md << "---|";
    md << "\n";
    for (const auto& method : methods) {
      md << "| " << method << " |";
      for (int m : missing) {
        double sum = 0.0;
        int count = 0;
        for (const auto& r : rows)
          if (r.method == method && r.density == density_name(d) && r.missing == m) {
            sum += r.accuracy;
            ++count;
          }
        char buf[32];
        std::snprintf(buf, sizeof(buf), " %.2f |", count ? sum / count : 0.0);
        md << buf;
      }
      md << "\n";
    }
  }
  write_text_file((fs::path(out_dir) / "summary.md").string(), md.str());
  std::printf("sweep: %zu cells x %zu methods -> %zu rows in %s\n", cells.size(), methods.size(),
              rows.size(), (fs::path(out_dir) / "results.csv").string().c_str());
  return kExitOk;
}

// ---- ablate ----

int cmd_ablate(const RunConfig& base_cfg, const std::vector<std::string>& scenario_dirs,
               const std::string& seeds_s, const std::string& density_s,
               const std::string& missing_s, const std::string& out_dir) {
  std::vector<std::uint64_t> seeds = parse_seed_list(seeds_s);
  std::vector<int> missing = parse_int_list(missing_s);
  DensityLevel eval_density = density_from_name(density_s);
  if (seeds.empty()) throw std::invalid_argument("ablate: empty seed list");

  struct Variant {
    const char* name;
    bool use_tga, use_sta;
  };
  const Variant variants[] = {{"tga_only", true, false}, {"sta_only", false, true},
                              {"full", true, true}};

  struct Job {
    std::size_t seed_idx;
    std::size_t variant_idx;
  };
  std::vector<Job> jobs;
  for (std::size_t s = 0; s < seeds.size(); ++s)
    for (std::size_t v = 0; v < 3; ++v) jobs.push_back({s, v});

  // training data: provided scenario dirs, or fresh per-seed scenes
  std::vector<std::vector<WindowPair>> dataset_per_seed(seeds.size());
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    std::vector<Scenario> scenarios;
    if (!scenario_dirs.empty()) {
      for (const auto& dir : scenario_dirs) scenarios.push_back(load_scenario(dir));
    } else {
      scenarios.push_back(build_cell_scenario(DensityLevel::Low, 0, mix_seed(seeds[s], 1)));
      scenarios.push_back(build_cell_scenario(DensityLevel::Moderate, 0, mix_seed(seeds[s], 2)));
    }
    dataset_per_seed[s] = make_dataset(scenarios, base_cfg.window_k, base_cfg.stride);
  }

  struct Row {
    std::string variant;
    std::uint64_t seed;
    int missing;
    double accuracy;
  };
  std::vector<std::vector<Row>> rows_per_job(jobs.size());
  parallel_for(static_cast<int>(jobs.size()), env_thread_cap(), [&](int ji) {
    const Job& job = jobs[ji];
    const Variant& var = variants[job.variant_idx];
    NetConfig net = base_cfg.net;
    net.use_tga = var.use_tga;
    net.use_sta = var.use_sta;
    TrainConfig tc = base_cfg.train;
    tc.seed = seeds[job.seed_idx];
    TrainResult tr = train(dataset_per_seed[job.seed_idx], net, tc, base_cfg.tau);

    for (int m : missing) {
      Scenario sc = build_cell_scenario(eval_density, m, mix_seed(seeds[job.seed_idx], 77));
      auto windows = prepare_windows(sc, base_cfg.window_k, base_cfg.window_k);
      EvalResult r = evaluate_model(windows, tr.best, net, base_cfg.tau);
      rows_per_job[ji].push_back({var.name, seeds[job.seed_idx], m, r.mean_accuracy});
    }
  });

  fs::create_directories(out_dir);
  std::ostringstream csv;
  csv << "variant,seed,missing,accuracy\n";
  for (const auto& jr : rows_per_job)
    for (const auto& r : jr) {
      char buf[128];
      std::snprintf(buf, sizeof(buf), "%s,%llu,%d,%.6f\n", r.variant.c_str(),
                    static_cast<unsigned long long>(r.seed), r.missing, r.accuracy);
      csv << buf;
    }
  write_text_file((fs::path(out_dir) / "ablation.csv").string(), csv.str());

  std::ostringstream md;
  md << "# Ablation (density: " << density_s << ", seeds: " << seeds_s << ")\n\n| variant |";
  for (int m : missing) md << " missing " << m << " |";
  md << "\n|---|";
  for (std::size_t i = 0; i < missing.size(); ++i) md << "---|";
  md << "\n";
  for (const auto& var : variants) {
    md << "| " << var.name << " |";
    for (int m : missing) {
      double sum = 0.0;
      int count = 0;
      for (const auto& jr : rows_per_job)
        for (const auto& r : jr)
          if (r.variant == var.name && r.missing == m) {
            sum += r.accuracy;
            ++count;
          }
      char buf[32];
      std::snprintf(buf, sizeof(buf), " %.2f |", count ? sum / count : 0.0);
      md << buf;
    }
    md << "\n";
  }
  write_text_file((fs::path(out_dir) / "summary.md").string(), md.str());
  std::printf("ablation: %zu jobs -> %s\n", jobs.size(),
              (fs::path(out_dir) / "ablation.csv").string().c_str());
  return kExitOk;
}

// ---- report ----

int cmd_report(const std::string& results_file, const std::string& history_file,
               const std::string& out_dir) {
  fs::create_directories(out_dir);

  if (!results_file.empty()) {
    auto rows = load_results_csv(results_file);

    std::vector<std::string> methods;
    for (const auto& r : rows)
      if (std::find(methods.begin(), methods.end(), r.method) == methods.end())
        methods.push_back(r.method);

    // accuracy vs density (missing == 0 rows)
    const std::vector<std::string> density_order{"low", "moderate", "high"};
    std::vector<std::string> densities;
    for (const auto& d : density_order)
      for (const auto& r : rows)
        if (r.density == d && std::find(densities.begin(), densities.end(), d) == densities.end())
          densities.push_back(d);
    std::vector<svg::Series> density_series;
    for (const auto& method : methods) {
      svg::Series s{method, {}};
      for (const auto& d : densities) {
        double sum = 0.0;
        int count = 0;
        for (const auto& r : rows)
          if (r.method == method && r.density == d && r.missing == 0) {
            sum += r.accuracy;
            ++count;
          }
        s.values.push_back(count ? sum / count : 0.0);
      }
      density_series.push_back(std::move(s));
    }
    write_text_file((fs::path(out_dir) / "accuracy_vs_density.svg").string(),
                    svg::bar_chart("Accuracy by vessel density", densities, density_series,
                                   "accuracy [%]"));

    // accuracy vs missing count
    std::vector<int> missing;
    for (const auto& r : rows)
      if (std::find(missing.begin(), missing.end(), r.missing) == missing.end())
        missing.push_back(r.missing);
    std::sort(missing.begin(), missing.end());
    std::vector<double> xs(missing.begin(), missing.end());
    std::vector<svg::Series> missing_series;
    for (const auto& method : methods) {
      svg::Series s{method, {}};
      for (int m : missing) {
        double sum = 0.0;
        int count = 0;
        for (const auto& r : rows)
          if (r.method == method && r.missing == m) {
            sum += r.accuracy;
            ++count;
          }
        s.values.push_back(count ? sum / count : 0.0);
      }
      missing_series.push_back(std::move(s));
    }
    write_text_file((fs::path(out_dir) / "accuracy_vs_missing.svg").string(),
                    svg::line_chart("Accuracy by missing-track count", xs, missing_series,
                                    "deleted tracks", "accuracy [%]", 0.0, 100.0));
  }

  if (!history_file.empty()) {
    std::ifstream in(history_file);
    if (!in) throw std::runtime_error("cannot open " + history_file);
    std::string line;
    std::vector<double> xs, train_loss, val_loss;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (lineno == 1 || line.empty()) continue;
      auto cells = split_csv(line);
      if (cells.size() != 4)
        throw std::runtime_error(history_file + ":" + std::to_string(lineno) +
                                 ": expected 4 columns");
      xs.push_back(std::stod(cells[0]));
      train_loss.push_back(std::stod(cells[1]));
      val_loss.push_back(std::stod(cells[2]));
    }
    double ymax = 1.0;
    for (double v : train_loss) ymax = std::max(ymax, v);
    for (double v : val_loss) ymax = std::max(ymax, v);
    write_text_file((fs::path(out_dir) / "loss_curve.svg").string(),
                    svg::line_chart("Training loss", xs,
                                    {{"train_loss", train_loss}, {"val_loss", val_loss}},
                                    "epoch", "loss", 0.0, ymax * 1.05));
  }
  std::printf("report written to %s\n", out_dir.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multimodal vessel trajectory association toolkit"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string config_file = prescan_config(argc, argv);
  if (!config_file.empty()) {
    try {
      cfg = load_run_config(config_file);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return kExitUsage;
    }
  }

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic paired-sensor scenario");
  std::string preset = "low", spec_file, missing_modality = "either", sim_out = "scenario";
  std::uint64_t sim_seed = 0;
  int vessels = 10, sim_missing = 0;
  std::int64_t duration = 600;
  double pixel_noise = 0.0, dropout = 0.0, occlusion = 0.0;
  bool identity_camera = false;
  sim->add_option("--preset", preset, "density preset: low|moderate|high")
      ->check(CLI::IsMember({"low", "moderate", "high"}));
  sim->add_option("--spec", spec_file, "scenario spec JSON (overrides --preset)");
  sim->add_option("--seed", sim_seed, "scenario seed");
  sim->add_option("--vessels", vessels, "vessel count override");
  sim->add_option("--duration", duration, "duration in seconds");
  sim->add_option("--missing", sim_missing, "whole tracks to delete");
  sim->add_option("--missing-modality", missing_modality, "A|B|either")
      ->check(CLI::IsMember({"A", "B", "either", "a", "b"}));
  sim->add_option("--pixel-noise", pixel_noise, "camera noise std override");
  sim->add_option("--dropout", dropout, "per-sample dropout probability override");
  sim->add_option("--occlusion", occlusion, "occlusion radius override");
  sim->add_flag("--identity-camera", identity_camera, "use the identity camera transform");
  sim->add_option("--out", sim_out, "output scenario directory")->required();

  // train
  auto* tr = app.add_subcommand("train", "Train the association model on scenarios");
  std::vector<std::string> train_scenarios;
  std::string train_out = "run";
  std::string config_dummy;
  tr->add_option("--config", config_dummy, "run-config JSON (flags override file values)");
  tr->add_option("--scenario", train_scenarios, "scenario directory (repeatable)")->required();
  tr->add_option("--out", train_out, "output directory")->required();
  tr->add_option("--epochs", cfg.train.epochs, "training epochs");
  tr->add_option("--lr", cfg.train.lr, "learning rate");
  tr->add_option("--gamma1", cfg.train.gamma1, "matching loss weight");
  tr->add_option("--gamma2", cfg.train.gamma2, "contrastive loss weight");
  tr->add_option("--margin", cfg.train.margin, "contrastive margin");
  tr->add_option("--clip-norm", cfg.train.clip_norm, "gradient clipping norm");
  tr->add_option("--seed", cfg.train.seed, "training seed");
  tr->add_option("--val-fraction", cfg.train.val_fraction, "validation window fraction");
  tr->add_flag("--literal-contrastive", cfg.train.literal_contrastive,
               "use the sign convention max(0, m + S_pos - S_neg)");
  tr->add_option("--d", cfg.net.d, "feature dimension");
  tr->add_option("--heads", cfg.net.heads, "attention heads");
  tr->add_option("--tga-layers", cfg.net.tga_layers, "stacked TGA layers");
  tr->add_option("--ffn", cfg.net.ffn_hidden, "FFN hidden width");
  tr->add_option("--spatial-k", cfg.net.spatial_k, "spatial neighbor count");
  tr->add_flag("--same-target-only", cfg.net.same_target_only,
               "restrict temporal edges to the same target");
  tr->add_flag("--additive-spatial", cfg.net.additive_spatial,
               "additive tanh spatial scoring");
  bool no_tga = false, no_sta = false;
  tr->add_flag("--no-tga", no_tga, "disable the TGA layers");
  tr->add_flag("--no-sta", no_sta, "disable the STA block");
  tr->add_option("--k", cfg.window_k, "window length");
  tr->add_option("--stride", cfg.stride, "window stride");
  tr->add_option("--tau", cfg.tau, "matching threshold");

  // associate
  auto* as = app.add_subcommand("associate", "Match the two streams of a scenario");
  std::string as_checkpoint, as_scenario, as_method = "gmva", as_out = "matches";
  int as_window = 0, as_k = 6;
  double as_tau = 0.5;
  bool as_all = false;
  as->add_option("--checkpoint", as_checkpoint, "checkpoint .bin path (gmva method)");
  as->add_option("--scenario", as_scenario, "scenario directory")->required();
  as->add_option("--method", as_method, "gmva|ed|cd|dtw|pdf")
      ->check(CLI::IsMember({"gmva", "ed", "cd", "dtw", "pdf"}));
  as->add_option("--window", as_window, "single window index");
  as->add_flag("--all", as_all, "process every window");
  as->add_option("--tau", as_tau, "matching threshold override");
  as->add_option("--k", as_k, "window length (must match the checkpoint)");
  as->add_option("--out", as_out, "output directory")->required();

  // sweep
  auto* sw = app.add_subcommand("sweep", "Evaluate methods over a scenario grid");
  std::string sw_checkpoint, sw_densities = "low,moderate,high", sw_missing = "0",
              sw_seeds = "1,2,3,4,5", sw_methods = "gmva,ed,cd,dtw,pdf", sw_out = "sweep";
  sw->add_option("--checkpoint", sw_checkpoint, "checkpoint .bin path (gmva rows)");
  sw->add_option("--densities", sw_densities, "comma list of low|moderate|high");
  sw->add_option("--missing", sw_missing, "comma list of deletion counts");
  sw->add_option("--seeds", sw_seeds, "comma list of scenario seeds");
  sw->add_option("--methods", sw_methods, "comma list of gmva|ed|cd|dtw|pdf");
  sw->add_option("--out", sw_out, "output directory")->required();

  // ablate
  auto* ab = app.add_subcommand("ablate", "Train and evaluate module-ablation variants");
  std::vector<std::string> ab_scenarios;
  std::string ab_seeds = "1,2,3", ab_density = "high", ab_missing = "0,2,4,6,8,10",
              ab_out = "ablation";
  ab->add_option("--config", config_dummy, "run-config JSON (flags override file values)");
  ab->add_option("--scenario", ab_scenarios, "training scenario directory (repeatable)");
  ab->add_option("--seeds", ab_seeds, "comma list of training seeds");
  ab->add_option("--density", ab_density, "evaluation density preset");
  ab->add_option("--missing", ab_missing, "comma list of deletion counts");
  ab->add_option("--epochs", cfg.train.epochs, "training epochs per variant");
  ab->add_option("--lr", cfg.train.lr, "learning rate");
  ab->add_option("--d", cfg.net.d, "feature dimension");
  ab->add_option("--heads", cfg.net.heads, "attention heads");
  ab->add_option("--ffn", cfg.net.ffn_hidden, "FFN hidden width");
  ab->add_option("--k", cfg.window_k, "window length");
  ab->add_option("--stride", cfg.stride, "window stride");
  ab->add_option("--tau", cfg.tau, "matching threshold");
  ab->add_option("--out", ab_out, "output directory")->required();

  // report
  auto* rp = app.add_subcommand("report", "Render SVG plots from result CSVs");
  std::string rp_results, rp_history, rp_out = "report";
  rp->add_option("--results", rp_results, "results.csv from sweep");
  rp->add_option("--history", rp_history, "history.csv from train");
  rp->add_option("--out", rp_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (sim->parsed())
      return cmd_simulate(preset, spec_file, sim_seed, vessels, duration, sim_missing,
                          missing_modality, pixel_noise, dropout, occlusion, identity_camera,
                          sim_out, sim);
    if (tr->parsed()) {
      cfg.net.use_tga = !no_tga;
      cfg.net.use_sta = !no_sta;
      return cmd_train(cfg, train_scenarios, train_out);
    }
    if (as->parsed())
      return cmd_associate(as_checkpoint, as_scenario, as_method, as_window,
                           as_all || !as->count("--window"), as_tau, as->count("--tau") > 0, as_k,
                           as->count("--k") > 0, as_out);
    if (sw->parsed())
      return cmd_sweep(sw_checkpoint, sw_densities, sw_missing, sw_seeds, sw_methods, sw_out);
    if (ab->parsed())
      return cmd_ablate(cfg, ab_scenarios, ab_seeds, ab_density, ab_missing, ab_out);
    if (rp->parsed()) return cmd_report(rp_results, rp_history, rp_out);
  } catch (const TrainingDiverged& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitDiverged;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
