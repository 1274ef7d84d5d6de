#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "risbf/channel.hpp"
#include "risbf/features.hpp"
#include "risbf/mlp.hpp"
#include "risbf/objective.hpp"

namespace risbf {

struct TrainConfig {
  int batch_size = 5000;
  double init_lr = 0.001;
  int max_epochs = 1000;
  int early_stop_patience = 30;  // epochs without a new validation minimum
  int plateau_patience = 15;     // epochs before the learning rate decays
  double lr_decay = 0.33;
  uint64_t seed = 0;

  void validate() const;
};

struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  std::vector<double> learning_rate;
  int best_epoch = -1;  // index of the restored (minimal validation) epoch
};

/// A deployable predictor: architecture, feature statistics, and weights.
struct NetworkParams {
  ArchitectureSpec spec;
  Standardizer standardizer;
  Mlp<float> net;
};

struct TrainResult {
  NetworkParams params;
  TrainHistory history;
};

/// theta = cos(p) + j sin(p); feasible by construction for any real input.
PhaseVector lambda_layer(const Eigen::VectorXd& p_pred);

/// -(1/K) sum_k ||G_k Theta_k h_{r,k} + h_{d,k}||^2.
double unsupervised_loss(std::span<const ChannelRealization> channels,
                         std::span<const PhaseVector> thetas);

/// Mini-batch training with shuffling, plateau LR decay, early stopping, and
/// best-validation-epoch weight restoration. Deterministic for a fixed
/// (datasets, spec, config.seed).
TrainResult train(const Dataset& train_set, const Dataset& val_set,
                  const ArchitectureSpec& spec, const TrainConfig& config);

/// standardize -> forward (inference statistics) -> lambda layer.
PhaseVector predict(const NetworkParams& params, const ChannelRealization& ch);

/// Batched prediction over many realizations; one forward pass, so the
/// per-instance cost is amortized across the batch.
std::vector<PhaseVector> predict_batch(
    const NetworkParams& params, std::span<const ChannelRealization> batch);

/// Model file, little-endian:
///   "RISM" | version u32 | M u32 | N u32 | feature_len u32 |
///   standardizer mean f64[len], std f64[len] |
///   per FC layer: out u32, in u32, weights f64 row-major, bias f64[out],
///   and for the four hidden layers the BN scale/shift/running mean/var.
void save_model(const NetworkParams& params, const std::string& path);

/// Rejects wrong magic or version and any inconsistent shape chain.
NetworkParams load_model(const std::string& path);

}  // namespace risbf
