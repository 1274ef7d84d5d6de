#include "risbf/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "risbf/objective.hpp"

namespace risbf {

ArchitectureSpec ArchitectureSpec::standard(int antennas, int elements,
                                            bool bn) {
  ArchitectureSpec spec;
  spec.M = antennas;
  spec.N = elements;
  spec.layer_widths = {32 * elements, 16 * elements, 8 * elements,
                       4 * elements, elements};
  spec.bn_after_fc = bn;
  spec.validate();
  return spec;
}

ArchitectureSpec ArchitectureSpec::custom(int antennas, int elements,
                                          std::array<int, 5> widths, bool bn) {
  ArchitectureSpec spec;
  spec.M = antennas;
  spec.N = elements;
  spec.layer_widths = widths;
  spec.bn_after_fc = bn;
  spec.validate();
  return spec;
}

bool ArchitectureSpec::follows_width_law() const {
  return layer_widths ==
         std::array<int, 5>{32 * N, 16 * N, 8 * N, 4 * N, N};
}

void ArchitectureSpec::validate() const {
  if (M < 1 || N < 1) {
    throw std::invalid_argument("ArchitectureSpec: M and N must be >= 1");
  }
  for (int w : layer_widths) {
    if (w < 1) throw std::invalid_argument("ArchitectureSpec: widths must be >= 1");
  }
  if (layer_widths.back() != N) {
    throw std::invalid_argument(
        "ArchitectureSpec: output width must equal the element count");
  }
}

void TrainConfig::validate() const {
  if (batch_size < 2) throw std::invalid_argument("TrainConfig: batch_size must be >= 2");
  if (!(init_lr > 0.0)) throw std::invalid_argument("TrainConfig: init_lr must be > 0");
  if (max_epochs < 1) throw std::invalid_argument("TrainConfig: max_epochs must be >= 1");
  if (early_stop_patience < 1) {
    throw std::invalid_argument("TrainConfig: early_stop_patience must be >= 1");
  }
  if (plateau_patience < 1) {
    throw std::invalid_argument("TrainConfig: plateau_patience must be >= 1");
  }
  if (!(lr_decay > 0.0) || !(lr_decay < 1.0)) {
    throw std::invalid_argument("TrainConfig: lr_decay must lie in (0, 1)");
  }
}

PhaseVector lambda_layer(const Eigen::VectorXd& p_pred) {
  PhaseVector out;
  out.theta.resize(p_pred.size());
  for (Eigen::Index n = 0; n < p_pred.size(); ++n) {
    out.theta(n) = {std::cos(p_pred(n)), std::sin(p_pred(n))};
  }
  return out;
}

double unsupervised_loss(std::span<const ChannelRealization> channels,
                         std::span<const PhaseVector> thetas) {
  if (channels.empty()) {
    throw std::invalid_argument("unsupervised_loss: empty batch");
  }
  if (channels.size() != thetas.size()) {
    throw std::invalid_argument("unsupervised_loss: batch size mismatch");
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < channels.size(); ++k) {
    acc += channel_gain(channels[k], thetas[k]);
  }
  return -acc / static_cast<double>(channels.size());
}

namespace {

using MatF = Mlp<float>::Mat;

MatF raw_feature_matrix(const Dataset& dataset) {
  const Eigen::Index len = static_cast<Eigen::Index>(
      feature_length(dataset.config.M, dataset.config.N));
  MatF rows(static_cast<Eigen::Index>(dataset.samples.size()), len);
  for (std::size_t k = 0; k < dataset.samples.size(); ++k) {
    rows.row(static_cast<Eigen::Index>(k)) =
        extract_features(dataset.samples[k]).values.cast<float>().transpose();
  }
  return rows;
}

MatF standardize_rows(const MatF& raw, const Standardizer& s) {
  const Eigen::RowVectorXf mean = s.mean.cast<float>().transpose();
  const Eigen::RowVectorXf inv_scale =
      (1.0 / (s.std.array() + s.epsilon)).cast<float>().matrix().transpose();
  return ((raw.rowwise() - mean).array().rowwise() * inv_scale.array()).matrix();
}

double validation_loss(const Mlp<float>& net, const MatF& features_std,
                       const MatF& features_raw, int antennas, int elements,
                       int chunk) {
  const Eigen::Index total = features_std.rows();
  double acc = 0.0;
  for (Eigen::Index start = 0; start < total; start += chunk) {
    const Eigen::Index rows = std::min<Eigen::Index>(chunk, total - start);
    const MatF phases =
        mlp_infer(net, MatF(features_std.middleRows(start, rows)));
    acc += gain_loss_from_features<float>(features_raw.middleRows(start, rows),
                                          antennas, elements, phases) *
           static_cast<double>(rows);
  }
  return acc / static_cast<double>(total);
}

// Fisher-Yates; bounded draws use Lemire rejection so every permutation is
// exactly equally likely.
void shuffle_indices(std::vector<Eigen::Index>& indices, Philox& rng) {
  for (std::size_t i = indices.size() - 1; i > 0; --i) {
    const uint64_t bound = i + 1;
    uint64_t x = rng.next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * bound;
    auto low = static_cast<uint64_t>(m);
    if (low < bound) {
      const uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        x = rng.next_u64();
        m = static_cast<__uint128_t>(x) * bound;
        low = static_cast<uint64_t>(m);
      }
    }
    std::swap(indices[i], indices[static_cast<std::size_t>(m >> 64)]);
  }
}

}  // namespace

TrainResult train(const Dataset& train_set, const Dataset& val_set,
                  const ArchitectureSpec& spec, const TrainConfig& config) {
  spec.validate();
  config.validate();
  if (train_set.samples.empty() || val_set.samples.empty()) {
    throw std::invalid_argument("train: empty dataset");
  }
  if (train_set.config.M != spec.M || train_set.config.N != spec.N ||
      val_set.config.M != spec.M || val_set.config.N != spec.N) {
    throw std::invalid_argument("train: dataset (M, N) does not match the spec");
  }

  const int antennas = spec.M;
  const int elements = spec.N;
  const MatF train_raw = raw_feature_matrix(train_set);
  const MatF val_raw = raw_feature_matrix(val_set);
  const Standardizer standardizer = fit_standardizer(train_set);
  const MatF train_std = standardize_rows(train_raw, standardizer);
  const MatF val_std = standardize_rows(val_raw, standardizer);

  Philox init_rng = make_stream(config.seed, StreamPurpose::kNetworkInit);
  Philox shuffle_rng = make_stream(config.seed, StreamPurpose::kTrainShuffle);
  Mlp<float> net = init_mlp<float>(spec, init_rng);
  AdamState<float> adam = AdamState<float>::zeros_like(net);

  const Eigen::Index total = train_raw.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(total));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  TrainResult result;
  result.params.spec = spec;
  result.params.standardizer = standardizer;

  double lr = config.init_lr;
  double best_val = std::numeric_limits<double>::infinity();
  Mlp<float> best_net = net;
  int best_epoch = -1;
  int epochs_since_best = 0;
  int epochs_since_plateau_reset = 0;

  MatF batch_std, batch_raw, d_phase;
  ForwardCache<float> cache;
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    if (total > 1) shuffle_indices(order, shuffle_rng);
    double epoch_loss = 0.0;
    Eigen::Index start = 0;
    while (start < total) {
      Eigen::Index rows = std::min<Eigen::Index>(config.batch_size, total - start);
      // A trailing single sample cannot form batch statistics; fold it into
      // the previous batch instead of dropping it.
      if (rows == 1 && start > 0) {
        --start;
        rows = 2;
      }
      batch_std.resize(rows, train_std.cols());
      batch_raw.resize(rows, train_raw.cols());
      for (Eigen::Index r = 0; r < rows; ++r) {
        const Eigen::Index src = order[static_cast<std::size_t>(start + r)];
        batch_std.row(r) = train_std.row(src);
        batch_raw.row(r) = train_raw.row(src);
      }
      const MatF phases = mlp_forward(net, batch_std, RunMode::kTrain, &cache);
      const double batch_loss = gain_loss_from_features<float>(
          batch_raw, antennas, elements, phases, &d_phase);
      const MlpGrads<float> grads = mlp_backward(net, cache, d_phase);
      adam_step(net, grads, adam, lr);
      epoch_loss += batch_loss * static_cast<double>(rows);
      start += rows;
    }
    epoch_loss /= static_cast<double>(total);
    const double val = validation_loss(net, val_std, val_raw, antennas,
                                       elements, config.batch_size);
    result.history.train_loss.push_back(epoch_loss);
    result.history.val_loss.push_back(val);
    result.history.learning_rate.push_back(lr);

    if (val < best_val) {
      best_val = val;
      best_net = net;
      best_epoch = epoch;
      epochs_since_best = 0;
      epochs_since_plateau_reset = 0;
    } else {
      ++epochs_since_best;
      ++epochs_since_plateau_reset;
    }
    if (epochs_since_best >= config.early_stop_patience) break;
    if (epochs_since_plateau_reset >= config.plateau_patience) {
      lr *= config.lr_decay;
      epochs_since_plateau_reset = 0;
    }
  }

  result.params.net = std::move(best_net);
  result.history.best_epoch = best_epoch;
  return result;
}

PhaseVector predict(const NetworkParams& params, const ChannelRealization& ch) {
  if (ch.antennas() != params.spec.M || ch.elements() != params.spec.N) {
    throw std::invalid_argument("predict: channel shape does not match the model");
  }
  const FeatureVector f = extract_features(ch);
  const Eigen::VectorXd standardized = params.standardizer.apply(f.values);
  const Mlp<float>::Vec phases =
      mlp_infer_vec(params.net, standardized.cast<float>().eval());
  return lambda_layer(phases.cast<double>());
}

std::vector<PhaseVector> predict_batch(
    const NetworkParams& params, std::span<const ChannelRealization> batch) {
  if (batch.empty()) throw std::invalid_argument("predict_batch: empty batch");
  const Eigen::Index len = params.standardizer.mean.size();
  MatF input(static_cast<Eigen::Index>(batch.size()), len);
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const auto& ch = batch[k];
    if (ch.antennas() != params.spec.M || ch.elements() != params.spec.N) {
      throw std::invalid_argument(
          "predict_batch: channel shape does not match the model");
    }
    input.row(static_cast<Eigen::Index>(k)) =
        params.standardizer.apply(extract_features(ch).values)
            .cast<float>()
            .transpose();
  }
  const MatF phases = mlp_infer(params.net, input);
  std::vector<PhaseVector> out;
  out.reserve(batch.size());
  for (Eigen::Index k = 0; k < phases.rows(); ++k) {
    out.push_back(lambda_layer(phases.row(k).transpose().cast<double>()));
  }
  return out;
}

namespace {

constexpr char kModelMagic[4] = {'R', 'I', 'S', 'M'};
constexpr uint32_t kModelVersion = 1;

template <typename T>
void write_pod(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error("model file: truncated");
  return value;
}

void write_f64_span(std::ostream& out, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) write_pod(out, v(i));
}

Eigen::VectorXd read_f64_vec(std::istream& in, Eigen::Index len) {
  Eigen::VectorXd v(len);
  for (Eigen::Index i = 0; i < len; ++i) {
    v(i) = read_pod<double>(in);
    if (!std::isfinite(v(i))) {
      throw std::runtime_error("model file: non-finite parameter");
    }
  }
  return v;
}

}  // namespace

void save_model(const NetworkParams& params, const std::string& path) {
  if (!params.net.bn_enabled || params.net.bn.size() != 4 ||
      params.net.fc.size() != 5) {
    throw std::invalid_argument(
        "save_model: the model format carries exactly 5 FC layers with BN on "
        "the hidden ones");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write(kModelMagic, sizeof(kModelMagic));
  write_pod<uint32_t>(out, kModelVersion);
  write_pod<uint32_t>(out, static_cast<uint32_t>(params.spec.M));
  write_pod<uint32_t>(out, static_cast<uint32_t>(params.spec.N));
  const auto feature_len = static_cast<uint32_t>(params.standardizer.mean.size());
  write_pod<uint32_t>(out, feature_len);
  write_f64_span(out, params.standardizer.mean);
  write_f64_span(out, params.standardizer.std);
  for (std::size_t l = 0; l < params.net.fc.size(); ++l) {
    const auto& layer = params.net.fc[l];
    write_pod<uint32_t>(out, static_cast<uint32_t>(layer.weight.rows()));
    write_pod<uint32_t>(out, static_cast<uint32_t>(layer.weight.cols()));
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
        write_pod<double>(out, static_cast<double>(layer.weight(r, c)));
      }
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) {
      write_pod<double>(out, static_cast<double>(layer.bias(r)));
    }
    if (l < 4) {
      const auto& bn = params.net.bn[l];
      write_f64_span(out, bn.gamma.cast<double>());
      write_f64_span(out, bn.beta.cast<double>());
      write_f64_span(out, bn.running_mean.cast<double>());
      write_f64_span(out, bn.running_var.cast<double>());
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

NetworkParams load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  char magic[4];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kModelMagic, sizeof(kModelMagic)) != 0) {
    throw std::runtime_error("model file: bad magic: " + path);
  }
  const auto version = read_pod<uint32_t>(in);
  if (version != kModelVersion) {
    throw std::runtime_error("model file: unsupported version " +
                             std::to_string(version));
  }
  const auto antennas = read_pod<uint32_t>(in);
  const auto elements = read_pod<uint32_t>(in);
  const auto feature_len = read_pod<uint32_t>(in);
  if (antennas == 0 || elements == 0 ||
      feature_len != feature_length(static_cast<int>(antennas),
                                    static_cast<int>(elements))) {
    throw std::runtime_error("model file: inconsistent header shapes");
  }

  NetworkParams params;
  params.standardizer.mean = read_f64_vec(in, feature_len);
  params.standardizer.std = read_f64_vec(in, feature_len);
  params.net.bn_enabled = true;
  uint32_t prev_width = feature_len;
  std::array<int, 5> widths{};
  for (std::size_t l = 0; l < 5; ++l) {
    const auto rows = read_pod<uint32_t>(in);
    const auto cols = read_pod<uint32_t>(in);
    if (cols != prev_width || rows == 0) {
      throw std::runtime_error("model file: broken layer shape chain");
    }
    Mlp<float>::FcLayer layer;
    layer.weight.resize(rows, cols);
    for (uint32_t r = 0; r < rows; ++r) {
      for (uint32_t c = 0; c < cols; ++c) {
        layer.weight(r, c) = static_cast<float>(read_pod<double>(in));
      }
    }
    layer.bias = read_f64_vec(in, rows).cast<float>();
    params.net.fc.push_back(std::move(layer));
    if (l < 4) {
      Mlp<float>::BnLayer bn;
      bn.gamma = read_f64_vec(in, rows).cast<float>();
      bn.beta = read_f64_vec(in, rows).cast<float>();
      bn.running_mean = read_f64_vec(in, rows).cast<float>();
      bn.running_var = read_f64_vec(in, rows).cast<float>();
      if ((bn.running_var.array() < 0.0f).any()) {
        throw std::runtime_error("model file: negative running variance");
      }
      params.net.bn.push_back(std::move(bn));
    }
    prev_width = rows;
  }
  if (prev_width != elements) {
    throw std::runtime_error("model file: output width does not match N");
  }
  params.spec.M = static_cast<int>(antennas);
  params.spec.N = static_cast<int>(elements);
  params.spec.bn_after_fc = true;
  for (std::size_t l = 0; l < 5; ++l) {
    params.spec.layer_widths[l] =
        static_cast<int>(params.net.fc[l].weight.rows());
  }
  params.spec.validate();
  return params;
}

}  // namespace risbf
