#pragma once

#include <Eigen/Core>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "risbf/features.hpp"
#include "risbf/rng.hpp"

namespace risbf {

/// Five fully connected layers sized proportionally to the element count so
/// capacity scales with the surface: 32N, 16N, 8N, 4N, N. ReLU after the
/// first four, linear output. Batch normalization sits between each hidden
/// FC layer and its activation.
struct ArchitectureSpec {
  int M = 1;
  int N = 8;
  std::array<int, 5> layer_widths{};
  bool bn_after_fc = true;

  int input_width() const { return static_cast<int>(feature_length(M, N)); }

  static ArchitectureSpec standard(int antennas, int elements, bool bn = true);
  /// Arbitrary widths, for small test networks.
  static ArchitectureSpec custom(int antennas, int elements,
                                 std::array<int, 5> widths, bool bn = true);

  bool follows_width_law() const;
  void validate() const;
};

enum class RunMode { kTrain, kInfer };

inline constexpr double kBnEpsilon = 1e-5;
inline constexpr double kBnMomentum = 0.9;  // running = m*running + (1-m)*batch

template <typename Scalar>
struct Mlp {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  struct FcLayer {
    Mat weight;  // out x in
    Vec bias;    // out
  };
  struct BnLayer {
    Vec gamma;         // scale
    Vec beta;          // shift
    Vec running_mean;  // inference statistics
    Vec running_var;
  };

  std::vector<FcLayer> fc;  // 5 layers
  std::vector<BnLayer> bn;  // 4 layers when enabled, else empty
  bool bn_enabled = true;
};

template <typename Scalar>
struct MlpGrads {
  using Mat = typename Mlp<Scalar>::Mat;
  using Vec = typename Mlp<Scalar>::Vec;
  std::vector<Mat> d_weight;
  std::vector<Vec> d_bias;
  std::vector<Vec> d_gamma;
  std::vector<Vec> d_beta;
};

template <typename Scalar>
struct ForwardCache {
  using Mat = typename Mlp<Scalar>::Mat;
  using Vec = typename Mlp<Scalar>::Vec;
  // inputs[l] feeds layer l; inputs[5] is unused (the output is returned).
  std::vector<Mat> inputs;
  std::vector<Mat> xhat;     // BN-normalized pre-activations, hidden layers
  std::vector<Vec> inv_std;  // 1/sqrt(batch_var + eps) per hidden layer
  bool valid = false;
};

/// He-uniform fan-in init for the ReLU layers, Glorot-uniform for the linear
/// output layer; biases zero, BN starts as identity with (0, 1) running stats.
template <typename Scalar>
Mlp<Scalar> init_mlp(const ArchitectureSpec& spec, Philox& rng) {
  spec.validate();
  Mlp<Scalar> net;
  net.bn_enabled = spec.bn_after_fc;
  int fan_in = spec.input_width();
  for (int l = 0; l < 5; ++l) {
    const int fan_out = spec.layer_widths[static_cast<std::size_t>(l)];
    typename Mlp<Scalar>::FcLayer layer;
    layer.weight.resize(fan_out, fan_in);
    const double limit = l < 4 ? std::sqrt(6.0 / fan_in)
                               : std::sqrt(6.0 / (fan_in + fan_out));
    for (int r = 0; r < fan_out; ++r) {
      for (int c = 0; c < fan_in; ++c) {
        layer.weight(r, c) = static_cast<Scalar>(rng.uniform(-limit, limit));
      }
    }
    layer.bias = Mlp<Scalar>::Vec::Zero(fan_out);
    net.fc.push_back(std::move(layer));
    if (net.bn_enabled && l < 4) {
      typename Mlp<Scalar>::BnLayer bn;
      bn.gamma = Mlp<Scalar>::Vec::Ones(fan_out);
      bn.beta = Mlp<Scalar>::Vec::Zero(fan_out);
      bn.running_mean = Mlp<Scalar>::Vec::Zero(fan_out);
      bn.running_var = Mlp<Scalar>::Vec::Ones(fan_out);
      net.bn.push_back(std::move(bn));
    }
    fan_in = fan_out;
  }
  return net;
}

/// FC -> BN -> ReLU for the hidden layers, FC -> linear for the output.
/// Train mode normalizes with batch statistics and updates the running ones;
/// infer mode uses the running statistics and leaves the network untouched.
/// Returns the K x N output; fills cache when given (train mode only).
template <typename Scalar>
typename Mlp<Scalar>::Mat mlp_forward(Mlp<Scalar>& net,
                                      const typename Mlp<Scalar>::Mat& input,
                                      RunMode mode,
                                      ForwardCache<Scalar>* cache = nullptr) {
  using Mat = typename Mlp<Scalar>::Mat;
  using Vec = typename Mlp<Scalar>::Vec;
  const auto rows = input.rows();
  if (mode == RunMode::kTrain && rows < 2) {
    throw std::invalid_argument(
        "mlp_forward: train mode needs a batch of at least 2 rows");
  }
  if (input.cols() != net.fc.front().weight.cols()) {
    throw std::invalid_argument("mlp_forward: feature width mismatch");
  }
  if (cache != nullptr) {
    if (mode != RunMode::kTrain) {
      throw std::invalid_argument(
          "mlp_forward: activation cache requires train mode");
    }
    cache->inputs.assign(5, Mat());
    cache->xhat.assign(4, Mat());
    cache->inv_std.assign(4, Vec());
    cache->valid = true;
  }

  const Scalar eps = static_cast<Scalar>(kBnEpsilon);
  const Scalar momentum = static_cast<Scalar>(kBnMomentum);
  const Scalar inv_rows = static_cast<Scalar>(1) / static_cast<Scalar>(rows);

  Mat x = input;
  for (std::size_t l = 0; l < net.fc.size(); ++l) {
    if (cache != nullptr) cache->inputs[l] = x;
    Mat z = (x * net.fc[l].weight.transpose()).rowwise() +
            net.fc[l].bias.transpose();
    if (l == net.fc.size() - 1) return z;  // linear output layer

    if (net.bn_enabled) {
      auto& bn = net.bn[l];
      Vec mean, inv_std;
      if (mode == RunMode::kTrain) {
        mean = z.colwise().sum().transpose() * inv_rows;
        z.rowwise() -= mean.transpose();
        Vec var = z.cwiseProduct(z).colwise().sum().transpose() * inv_rows;
        bn.running_mean = momentum * bn.running_mean +
                          (static_cast<Scalar>(1) - momentum) * mean;
        bn.running_var = momentum * bn.running_var +
                         (static_cast<Scalar>(1) - momentum) * var;
        inv_std = (var.array() + eps).rsqrt().matrix();
      } else {
        z.rowwise() -= bn.running_mean.transpose();
        inv_std = (bn.running_var.array() + eps).rsqrt().matrix();
      }
      z = (z.array().rowwise() * inv_std.transpose().array()).matrix();
      if (cache != nullptr) {
        cache->xhat[l] = z;
        cache->inv_std[l] = inv_std;
      }
      z = ((z.array().rowwise() * bn.gamma.transpose().array()).rowwise() +
           bn.beta.transpose().array())
              .matrix();
    }
    x = z.cwiseMax(Scalar(0));
  }
  return x;  // unreachable; fc is never empty
}

/// Analytic gradients for every weight, bias, and BN scale/shift given the
/// train-mode cache and d(loss)/d(output). The BN input gradient is
///   dz = inv_std * (dxhat - mean_k(dxhat) - xhat * mean_k(dxhat .* xhat))
/// per feature column, the batch-statistics chain rule.
template <typename Scalar>
MlpGrads<Scalar> mlp_backward(const Mlp<Scalar>& net,
                              const ForwardCache<Scalar>& cache,
                              const typename Mlp<Scalar>::Mat& d_output) {
  using Mat = typename Mlp<Scalar>::Mat;
  if (!cache.valid) {
    throw std::logic_error("mlp_backward: missing train-mode forward cache");
  }
  const std::size_t layers = net.fc.size();
  MlpGrads<Scalar> grads;
  grads.d_weight.resize(layers);
  grads.d_bias.resize(layers);
  if (net.bn_enabled) {
    grads.d_gamma.resize(layers - 1);
    grads.d_beta.resize(layers - 1);
  }

  const auto rows = cache.inputs[0].rows();
  const Scalar inv_rows = static_cast<Scalar>(1) / static_cast<Scalar>(rows);

  Mat d = d_output;
  for (int l = static_cast<int>(layers) - 1; l >= 0; --l) {
    const auto lu = static_cast<std::size_t>(l);
    if (lu < layers - 1) {
      // d currently holds dL/d(relu out); the next layer input is that
      // output, so its positive entries locate the active units.
      d = d.cwiseProduct(
          (cache.inputs[lu + 1].array() > Scalar(0)).template cast<Scalar>().matrix());
      if (net.bn_enabled) {
        const Mat& xhat = cache.xhat[lu];
        grads.d_gamma[lu] = d.cwiseProduct(xhat).colwise().sum().transpose();
        grads.d_beta[lu] = d.colwise().sum().transpose();
        Mat dxhat = d.array().rowwise() * net.bn[lu].gamma.transpose().array();
        const auto mean_dxhat = (dxhat.colwise().sum() * inv_rows).eval();
        const auto mean_dxhat_xhat =
            (dxhat.cwiseProduct(xhat).colwise().sum() * inv_rows).eval();
        d = (((dxhat.rowwise() - mean_dxhat) -
              (xhat.array().rowwise() * mean_dxhat_xhat.array()).matrix())
                 .array()
                 .rowwise() *
             cache.inv_std[lu].transpose().array())
                .matrix();
      }
    }
    grads.d_weight[lu] = d.transpose() * cache.inputs[lu];
    grads.d_bias[lu] = d.colwise().sum().transpose();
    if (l > 0) d = (d * net.fc[lu].weight).eval();
  }
  return grads;
}

/// Inference-mode forward pass; never touches the network.
template <typename Scalar>
typename Mlp<Scalar>::Mat mlp_infer(const Mlp<Scalar>& net,
                                    const typename Mlp<Scalar>::Mat& input) {
  return mlp_forward(const_cast<Mlp<Scalar>&>(net), input, RunMode::kInfer);
}

/// Single-example inference through matrix-vector products, the
/// latency-critical deployment path. Equivalent to a one-row batch up to
/// floating-point accumulation order.
template <typename Scalar>
typename Mlp<Scalar>::Vec mlp_infer_vec(const Mlp<Scalar>& net,
                                        const typename Mlp<Scalar>::Vec& x0) {
  using Vec = typename Mlp<Scalar>::Vec;
  if (x0.size() != net.fc.front().weight.cols()) {
    throw std::invalid_argument("mlp_infer_vec: feature width mismatch");
  }
  const Scalar eps = static_cast<Scalar>(kBnEpsilon);
  Vec x = x0;
  for (std::size_t l = 0; l < net.fc.size(); ++l) {
    Vec z = net.fc[l].weight * x + net.fc[l].bias;
    if (l == net.fc.size() - 1) return z;
    if (net.bn_enabled) {
      const auto& bn = net.bn[l];
      z = (((z - bn.running_mean).array() *
            (bn.running_var.array() + eps).rsqrt()) *
               bn.gamma.array() +
           bn.beta.array())
              .matrix();
    }
    x = z.cwiseMax(Scalar(0));
  }
  return x;  // unreachable
}

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename Scalar>
struct AdamState {
  using Mat = typename Mlp<Scalar>::Mat;
  using Vec = typename Mlp<Scalar>::Vec;
  std::vector<Mat> m_weight, v_weight;
  std::vector<Vec> m_bias, v_bias;
  std::vector<Vec> m_gamma, v_gamma, m_beta, v_beta;
  int64_t step = 0;

  static AdamState zeros_like(const Mlp<Scalar>& net) {
    AdamState state;
    for (const auto& layer : net.fc) {
      state.m_weight.push_back(Mat::Zero(layer.weight.rows(), layer.weight.cols()));
      state.v_weight.push_back(Mat::Zero(layer.weight.rows(), layer.weight.cols()));
      state.m_bias.push_back(Vec::Zero(layer.bias.size()));
      state.v_bias.push_back(Vec::Zero(layer.bias.size()));
    }
    for (const auto& bn : net.bn) {
      state.m_gamma.push_back(Vec::Zero(bn.gamma.size()));
      state.v_gamma.push_back(Vec::Zero(bn.gamma.size()));
      state.m_beta.push_back(Vec::Zero(bn.beta.size()));
      state.v_beta.push_back(Vec::Zero(bn.beta.size()));
    }
    return state;
  }
};

namespace detail {

template <typename Scalar, typename Tensor>
void adam_update(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v,
                 double lr, const AdamConfig& cfg, double bias1, double bias2) {
  const Scalar b1 = static_cast<Scalar>(cfg.beta1);
  const Scalar b2 = static_cast<Scalar>(cfg.beta2);
  m = b1 * m + (Scalar(1) - b1) * grad;
  v = (b2 * v.array() + (Scalar(1) - b2) * grad.array().square()).matrix();
  const auto m_hat = (m.array() / static_cast<Scalar>(bias1)).eval();
  const auto v_hat = (v.array() / static_cast<Scalar>(bias2)).eval();
  param.array() -=
      static_cast<Scalar>(lr) * m_hat / (v_hat.sqrt() + static_cast<Scalar>(cfg.epsilon));
}

}  // namespace detail

template <typename Scalar>
void adam_step(Mlp<Scalar>& net, const MlpGrads<Scalar>& grads,
               AdamState<Scalar>& state, double lr,
               const AdamConfig& cfg = {}) {
  ++state.step;
  const double bias1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bias2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t l = 0; l < net.fc.size(); ++l) {
    detail::adam_update<Scalar>(net.fc[l].weight, grads.d_weight[l],
                                state.m_weight[l], state.v_weight[l], lr, cfg,
                                bias1, bias2);
    detail::adam_update<Scalar>(net.fc[l].bias, grads.d_bias[l],
                                state.m_bias[l], state.v_bias[l], lr, cfg,
                                bias1, bias2);
  }
  for (std::size_t l = 0; l < net.bn.size(); ++l) {
    detail::adam_update<Scalar>(net.bn[l].gamma, grads.d_gamma[l],
                                state.m_gamma[l], state.v_gamma[l], lr, cfg,
                                bias1, bias2);
    detail::adam_update<Scalar>(net.bn[l].beta, grads.d_beta[l],
                                state.m_beta[l], state.v_beta[l], lr, cfg,
                                bias1, bias2);
  }
}

/// Mean negative channel gain of a batch, evaluated directly from raw
/// (unstandardized) feature rows that carry the g_{i,n} h_{r,n} products and
/// the direct link. When d_phase is non-null it receives
///   d loss / d p_{k,n} = (2/K) sum_i Im(conj(r_i) c_{i,n} e^{j p_{k,n}}),
/// the exact derivative of the loss through theta = e^{jp}.
template <typename Scalar>
double gain_loss_from_features(const typename Mlp<Scalar>::Mat& raw_features,
                               int antennas, int elements,
                               const typename Mlp<Scalar>::Mat& phases,
                               typename Mlp<Scalar>::Mat* d_phase = nullptr) {
  using Cplx = std::complex<Scalar>;
  const auto rows = raw_features.rows();
  if (rows == 0) throw std::invalid_argument("gain_loss: empty batch");
  if (phases.rows() != rows || phases.cols() != elements) {
    throw std::invalid_argument("gain_loss: phase batch shape mismatch");
  }
  if (raw_features.cols() !=
      static_cast<Eigen::Index>(feature_length(antennas, elements))) {
    throw std::invalid_argument("gain_loss: feature width mismatch");
  }
  if (d_phase != nullptr) d_phase->setZero(rows, elements);

  const Scalar inv_rows = Scalar(1) / static_cast<Scalar>(rows);
  const int direct_offset = 2 * antennas * elements;
  std::vector<Cplx> theta(static_cast<std::size_t>(elements));
  std::vector<Cplx> r(static_cast<std::size_t>(antennas));
  double loss = 0.0;
  for (Eigen::Index k = 0; k < rows; ++k) {
    for (int n = 0; n < elements; ++n) {
      theta[static_cast<std::size_t>(n)] =
          Cplx(std::cos(phases(k, n)), std::sin(phases(k, n)));
    }
    double power = 0.0;
    for (int i = 0; i < antennas; ++i) {
      Cplx acc(raw_features(k, direct_offset + 2 * i),
               raw_features(k, direct_offset + 2 * i + 1));
      const int row_base = 2 * i * elements;
      for (int n = 0; n < elements; ++n) {
        const Cplx c(raw_features(k, row_base + 2 * n),
                     raw_features(k, row_base + 2 * n + 1));
        acc += c * theta[static_cast<std::size_t>(n)];
      }
      r[static_cast<std::size_t>(i)] = acc;
      power += static_cast<double>(std::norm(acc));
    }
    loss -= power;
    if (d_phase != nullptr) {
      for (int n = 0; n < elements; ++n) {
        Scalar acc = 0;
        for (int i = 0; i < antennas; ++i) {
          const int row_base = 2 * i * elements;
          const Cplx c(raw_features(k, row_base + 2 * n),
                       raw_features(k, row_base + 2 * n + 1));
          acc += std::imag(std::conj(r[static_cast<std::size_t>(i)]) * c *
                           theta[static_cast<std::size_t>(n)]);
        }
        (*d_phase)(k, n) = Scalar(2) * inv_rows * acc;
      }
    }
  }
  return loss * static_cast<double>(inv_rows);
}

}  // namespace risbf
