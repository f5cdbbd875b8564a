#pragma once

// Training loop: per-window forward / backward / Adam over the shuffled
// training split, per-epoch validation loss and accuracy, best-checkpoint
// tracking and NaN divergence detection.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "gmva/losses.hpp"
#include "gmva/params.hpp"
#include "gmva/pipeline.hpp"

namespace gmva {

struct TrainConfig {
  int epochs = 100;
  double lr = 1e-4;
  double gamma1 = 1.0;
  double gamma2 = 0.5;
  double margin = 0.2;
  double clip_norm = 5.0;
  std::uint64_t seed = 0;
  double val_fraction = 0.2;
  bool literal_contrastive = false;

  void validate() const {
    if (epochs < 0) throw std::invalid_argument("TrainConfig: epochs must be >= 0");
    if (lr < 0.0) throw std::invalid_argument("TrainConfig: lr must be >= 0");
    if (gamma1 < 0.0 || gamma2 < 0.0)
      throw std::invalid_argument("TrainConfig: loss weights must be >= 0");
    if (margin <= 0.0) throw std::invalid_argument("TrainConfig: margin must be > 0");
    if (val_fraction < 0.0 || val_fraction >= 1.0)
      throw std::invalid_argument("TrainConfig: val_fraction must be in [0, 1)");
  }
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;  // percent
};

struct TrainResult {
  ParamStore params;  // after the last epoch
  ParamStore best;    // lowest validation loss snapshot
  int best_epoch = -1;
  std::vector<EpochStats> history;
};

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(int epoch, int window)
      : std::runtime_error("training diverged (non-finite loss) at epoch " +
                           std::to_string(epoch) + ", window " + std::to_string(window)),
        epoch(epoch),
        window(window) {}
  int epoch;
  int window;
};

namespace detail {

inline Value window_loss(const WindowPair& w, ParamStore& params, const NetConfig& net_cfg,
                         const TrainConfig& cfg) {
  NodeFeatures fa = extract_features(w.a, params, net_cfg);
  NodeFeatures fb = extract_features(w.b, params, net_cfg);
  SimilarityComputation sim = similarity_matrix(fa, fb, w.a, w.b, params, net_cfg);
  if (sim.empty()) return Value();
  Tensor t = truth_matrix(w.truth, w.a, w.b, sim.row_targets, sim.col_targets);
  return total_loss(sim.score_mat, t, cfg.gamma1, cfg.gamma2, cfg.margin,
                    cfg.literal_contrastive);
}

}  // namespace detail

// Parameters are optimized iteratively across windows; validation windows
// never contribute gradients. tau only feeds the per-epoch accuracy metric.
inline TrainResult train(const std::vector<WindowPair>& dataset, const NetConfig& net_cfg,
                         const TrainConfig& cfg, double tau = 0.5) {
  cfg.validate();
  net_cfg.validate();
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");

  std::vector<int> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  Rng split_rng(mix_seed(cfg.seed, 11));
  split_rng.shuffle(order);
  int n_val = 0;
  if (dataset.size() >= 2)
    n_val = std::min<int>(static_cast<int>(dataset.size()) - 1,
                          std::max(1, static_cast<int>(std::lround(cfg.val_fraction *
                                                                   dataset.size()))));
  if (cfg.val_fraction == 0.0) n_val = 0;
  std::vector<int> val_idx(order.begin(), order.begin() + n_val);
  std::vector<int> train_idx(order.begin() + n_val, order.end());

  TrainResult result;
  result.params = ParamStore(cfg.seed);
  ParamStore& params = result.params;

  double best_val = std::numeric_limits<double>::infinity();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<int> sched = train_idx;
    Rng epoch_rng(mix_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(epoch)));
    epoch_rng.shuffle(sched);

    double train_loss = 0.0;
    int train_count = 0;
    for (int wi : sched) {
      Value loss = detail::window_loss(dataset[wi], params, net_cfg, cfg);
      if (!loss.defined()) continue;  // window empty on one side
      double lv = loss.item();
      if (!std::isfinite(lv)) throw TrainingDiverged(epoch, wi);
      train_loss += lv;
      ++train_count;
      params.zero_grads();
      backward(loss);
      params.adam_step(cfg.lr, 0.9, 0.999, 1e-8, cfg.clip_norm);
    }
    if (train_count > 0) train_loss /= train_count;

    double val_loss = train_loss;
    double val_acc = 0.0;
    if (!val_idx.empty()) {
      double vl = 0.0;
      int vc = 0;
      double va = 0.0;
      int vac = 0;
      for (int wi : val_idx) {
        Value loss = detail::window_loss(dataset[wi], params, net_cfg, cfg);
        if (loss.defined()) {
          double lv = loss.item();
          if (!std::isfinite(lv)) throw TrainingDiverged(epoch, wi);
          vl += lv;
          ++vc;
        }
        if (!dataset[wi].truth.pairs.empty()) {
          MatchingMatrix m = associate_window(dataset[wi], params, net_cfg, tau);
          va += accuracy(m, dataset[wi].a, dataset[wi].b, dataset[wi].truth);
          ++vac;
        }
      }
      if (vc > 0) val_loss = vl / vc;
      if (vac > 0) val_acc = va / vac;
    }

    result.history.push_back({epoch, train_loss, val_loss, val_acc});
    if (val_loss < best_val) {
      best_val = val_loss;
      result.best = params.clone();
      result.best_epoch = epoch;
    }
  }
  if (result.best_epoch < 0) {
    result.best = params.clone();
    result.best_epoch = cfg.epochs > 0 ? cfg.epochs - 1 : 0;
  }
  return result;
}

}  // namespace gmva
