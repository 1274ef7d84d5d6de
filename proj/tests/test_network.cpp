#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "risbf/network.hpp"
#include "support/oracles.hpp"

using namespace risbf;

namespace {

using MatD = Mlp<double>::Mat;
using MatF = Mlp<float>::Mat;

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

Dataset small_dataset(int m, int n, std::size_t count, uint64_t seed) {
  ScenarioConfig config;
  config.M = m;
  config.N = n;
  return generate_dataset(config, count, seed);
}

/// Unit-power channels for well-scaled finite differences.
Dataset unit_scale_dataset(int m, int n, std::size_t count, uint64_t seed) {
  ScenarioConfig config;
  config.M = m;
  config.N = n;
  config.d_ar = 1.0;
  config.d0_min = config.d0_max = 0.0;
  config.d1_min = config.d1_max = 1.0;
  return generate_dataset(config, count, seed);
}

MatD raw_features_double(const Dataset& d) {
  const auto len = static_cast<Eigen::Index>(
      feature_length(d.config.M, d.config.N));
  MatD rows(static_cast<Eigen::Index>(d.samples.size()), len);
  for (std::size_t k = 0; k < d.samples.size(); ++k) {
    rows.row(static_cast<Eigen::Index>(k)) =
        extract_features(d.samples[k]).values.transpose();
  }
  return rows;
}

double net_loss(Mlp<double>& net, const MatD& input, const MatD& raw, int m,
                int n) {
  // Fresh running stats per call so train-mode forward stays a pure function
  // of (params, batch) for the finite-difference probe.
  Mlp<double> copy = net;
  const MatD phases = mlp_forward(copy, input, RunMode::kTrain);
  return gain_loss_from_features<double>(raw, m, n, phases);
}

}  // namespace

TEST_CASE("width law instantiation") {
  const auto spec = ArchitectureSpec::standard(1, 2);
  CHECK(spec.layer_widths == std::array<int, 5>{64, 32, 16, 8, 2});
  CHECK(spec.input_width() == 6);  // 2(NM + M) at M = 1, N = 2
  CHECK(spec.follows_width_law());
  CHECK_THROWS_AS(ArchitectureSpec::custom(1, 2, {4, 4, 4, 4, 3}),
                  std::invalid_argument);  // output width must equal N
}

TEST_CASE("init is deterministic and has the target variance") {
  const auto spec = ArchitectureSpec::standard(2, 4);
  Philox a(3), b(3);
  const auto net1 = init_mlp<float>(spec, a);
  const auto net2 = init_mlp<float>(spec, b);
  for (std::size_t l = 0; l < 5; ++l) {
    CHECK(net1.fc[l].weight == net2.fc[l].weight);
    CHECK(net1.fc[l].bias.cwiseAbs().maxCoeff() == 0.0f);
  }
  // Uniform(-L, L) has variance L^2/3: 2/fan_in (He), 2/(fan_in+fan_out)
  // for the output layer.
  for (std::size_t l = 0; l < 5; ++l) {
    const auto& w = net1.fc[l].weight;
    const double fan_in = static_cast<double>(w.cols());
    const double fan_out = static_cast<double>(w.rows());
    const double target =
        l < 4 ? 2.0 / fan_in : 2.0 / (fan_in + fan_out);
    const double mean = static_cast<double>(w.template cast<double>().mean());
    const double var =
        (w.template cast<double>().array() - mean).square().mean();
    CHECK(std::abs(var / target - 1.0) < 0.2);
  }
}

TEST_CASE("zero weights produce zero output") {
  const auto spec = ArchitectureSpec::custom(1, 2, {4, 4, 4, 4, 2});
  Philox rng(1);
  auto net = init_mlp<float>(spec, rng);
  for (auto& layer : net.fc) layer.weight.setZero();
  MatF input = MatF::Random(3, spec.input_width());
  const MatF out = mlp_forward(net, input, RunMode::kInfer);
  CHECK(out.cwiseAbs().maxCoeff() == 0.0f);
}

TEST_CASE("vector inference path agrees with the batch path") {
  const auto spec = ArchitectureSpec::standard(2, 4);
  Philox rng(19);
  auto net = init_mlp<float>(spec, rng);
  // Make running stats non-trivial.
  for (auto& bn : net.bn) {
    bn.running_mean.setConstant(0.1f);
    bn.running_var.setConstant(1.7f);
  }
  MatF batch = MatF::Random(5, spec.input_width());
  const MatF out = mlp_infer(net, batch);
  for (Eigen::Index r = 0; r < batch.rows(); ++r) {
    const Mlp<float>::Vec v =
        mlp_infer_vec(net, batch.row(r).transpose().eval());
    CHECK((v - out.row(r).transpose()).cwiseAbs().maxCoeff() < 1e-4f);
  }
  CHECK_THROWS_AS(mlp_infer_vec(net, Mlp<float>::Vec::Zero(3).eval()),
                  std::invalid_argument);
}

TEST_CASE("inference is repeatable and train mode rejects singletons") {
  const auto spec = ArchitectureSpec::standard(1, 2);
  Philox rng(7);
  auto net = init_mlp<float>(spec, rng);
  MatF input = MatF::Random(4, spec.input_width());
  const MatF a = mlp_infer(net, input);
  const MatF b = mlp_infer(net, input);
  CHECK(a == b);
  MatF single = MatF::Random(1, spec.input_width());
  CHECK_THROWS_AS(mlp_forward(net, single, RunMode::kTrain),
                  std::invalid_argument);
  MatF wrong = MatF::Random(4, spec.input_width() + 1);
  CHECK_THROWS_AS(mlp_forward(net, wrong, RunMode::kInfer),
                  std::invalid_argument);
}

TEST_CASE("train-mode batch statistics are normalized before scale/shift") {
  const auto spec = ArchitectureSpec::standard(2, 4);
  Philox rng(11);
  auto net = init_mlp<double>(spec, rng);
  const MatD input = MatD::Random(64, spec.input_width());
  ForwardCache<double> cache;
  mlp_forward(net, input, RunMode::kTrain, &cache);
  for (std::size_t l = 0; l < 4; ++l) {
    const MatD& xhat = cache.xhat[l];
    const Eigen::VectorXd mean = xhat.colwise().mean();
    CHECK(mean.cwiseAbs().maxCoeff() < 1e-6);
    const Eigen::VectorXd var =
        (xhat.rowwise() - mean.transpose()).array().square().colwise().mean();
    CHECK((var.array() - 1.0).abs().maxCoeff() < 1e-4);
  }
}

TEST_CASE("lambda layer maps angles onto the unit circle") {
  Eigen::VectorXd p(3);
  p << 0.0, Philox::pi() / 2.0, 4.0;
  const PhaseVector theta = lambda_layer(p);
  CHECK(std::abs(theta.theta(0) - std::complex<double>(1, 0)) < 1e-15);
  CHECK(std::abs(theta.theta(1) - std::complex<double>(0, 1)) < 1e-15);
  const PhaseVector wrapped = lambda_layer(
      (p.array() + 2.0 * Philox::pi()).matrix());
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(wrapped.theta(i) - theta.theta(i)) < 1e-12);
  }
}

TEST_CASE("unsupervised loss equals negative mean oracle gain") {
  const Dataset d = small_dataset(2, 4, 32, 5);
  std::vector<PhaseVector> thetas;
  Philox rng(5, 9);
  for (std::size_t k = 0; k < d.samples.size(); ++k) {
    PhaseVector t;
    t.theta.resize(4);
    for (int i = 0; i < 4; ++i) {
      const double phi = rng.uniform(0.0, 2.0 * Philox::pi());
      t.theta(i) = {std::cos(phi), std::sin(phi)};
    }
    thetas.push_back(std::move(t));
  }
  const double loss = unsupervised_loss(d.samples, thetas);
  double ref = 0.0;
  for (std::size_t k = 0; k < d.samples.size(); ++k) {
    ref += oracle::channel_gain(d.samples[k], oracle::to_vector(thetas[k]));
  }
  ref = -ref / static_cast<double>(d.samples.size());
  CHECK(loss == doctest::Approx(ref).epsilon(1e-10));

  // Single sample with gain 4 -> loss -4.
  ChannelRealization ch;
  ch.G = Eigen::MatrixXcd::Ones(1, 1);
  ch.h_r.resize(1);
  ch.h_r(0) = {0.0, 1.0};
  ch.h_d = Eigen::VectorXcd::Ones(1);
  PhaseVector minus_j;
  minus_j.theta.resize(1);
  minus_j.theta(0) = {0.0, -1.0};
  const std::vector<ChannelRealization> chs{ch};
  const std::vector<PhaseVector> ths{minus_j};
  CHECK(unsupervised_loss(chs, ths) == doctest::Approx(-4.0).epsilon(1e-12));

  // Zero channels -> loss 0.
  ChannelRealization zero;
  zero.G = Eigen::MatrixXcd::Zero(1, 1);
  zero.h_r = Eigen::VectorXcd::Zero(1);
  zero.h_d = Eigen::VectorXcd::Zero(1);
  const std::vector<ChannelRealization> zchs{zero};
  CHECK(unsupervised_loss(zchs, ths) == 0.0);
}

TEST_CASE("adam follows the hand recursion") {
  // One scalar parameter, constant gradient 1, lr 0.001, two steps.
  const auto spec = ArchitectureSpec::custom(1, 1, {1, 1, 1, 1, 1}, false);
  Philox rng(1);
  auto net = init_mlp<double>(spec, rng);
  for (auto& l : net.fc) {
    l.weight.setZero();
    l.bias.setZero();
  }
  auto state = AdamState<double>::zeros_like(net);
  MlpGrads<double> grads;
  for (const auto& l : net.fc) {
    grads.d_weight.push_back(MatD::Zero(l.weight.rows(), l.weight.cols()));
    grads.d_bias.push_back(Mlp<double>::Vec::Zero(l.bias.size()));
  }
  grads.d_weight[0](0, 0) = 1.0;

  const double lr = 0.001, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  double m = 0.0, v = 0.0, w = 0.0;
  for (int t = 1; t <= 2; ++t) {
    adam_step(net, grads, state, lr);
    m = b1 * m + (1 - b1) * 1.0;
    v = b2 * v + (1 - b2) * 1.0;
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    w -= lr * mh / (std::sqrt(vh) + eps);
    CHECK(net.fc[0].weight(0, 0) == doctest::Approx(w).epsilon(1e-12));
  }
  // Everything else untouched by zero gradients from zero state.
  CHECK(net.fc[1].weight.cwiseAbs().maxCoeff() == 0.0);

  // lr = 0 leaves parameters unchanged.
  const double before = net.fc[0].weight(0, 0);
  adam_step(net, grads, state, 0.0);
  CHECK(net.fc[0].weight(0, 0) == before);
}

TEST_CASE("every analytic gradient matches central finite differences") {
  const auto spec = ArchitectureSpec::custom(1, 2, {4, 4, 4, 4, 2}, true);
  const Dataset d = unit_scale_dataset(1, 2, 6, 77);
  const MatD raw = raw_features_double(d);
  const MatD input = raw;  // standardization is not part of the chain here

  Philox rng(13);
  auto net = init_mlp<double>(spec, rng);
  // Nudge BN parameters off the identity so their gradients are generic.
  for (auto& bn : net.bn) {
    bn.gamma.array() += 0.1;
    bn.beta.array() -= 0.05;
  }

  ForwardCache<double> cache;
  Mlp<double> stats_copy = net;
  const MatD phases = mlp_forward(stats_copy, input, RunMode::kTrain, &cache);
  MatD d_phase;
  gain_loss_from_features<double>(raw, 1, 2, phases, &d_phase);
  const MlpGrads<double> grads = mlp_backward(net, cache, d_phase);

  const double h = 1e-5;
  auto check_param = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + h;
    const double up = net_loss(net, input, raw, 1, 2);
    param = saved - h;
    const double down = net_loss(net, input, raw, 1, 2);
    param = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
    CHECK(std::abs(numeric - analytic) / denom < 1e-4);
  };

  for (std::size_t l = 0; l < 5; ++l) {
    auto& w = net.fc[l].weight;
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        check_param(w(r, c), grads.d_weight[l](r, c));
      }
    }
    auto& b = net.fc[l].bias;
    for (Eigen::Index r = 0; r < b.size(); ++r) {
      check_param(b(r), grads.d_bias[l](r));
    }
  }
  for (std::size_t l = 0; l < 4; ++l) {
    auto& bn = net.bn[l];
    for (Eigen::Index r = 0; r < bn.gamma.size(); ++r) {
      check_param(bn.gamma(r), grads.d_gamma[l](r));
      check_param(bn.beta(r), grads.d_beta[l](r));
    }
  }
}

TEST_CASE("gradient checks also pass without BN") {
  const auto spec = ArchitectureSpec::custom(1, 2, {4, 4, 4, 4, 2}, false);
  const Dataset d = unit_scale_dataset(1, 2, 5, 3);
  const MatD raw = raw_features_double(d);
  Philox rng(29);
  auto net = init_mlp<double>(spec, rng);
  ForwardCache<double> cache;
  const MatD phases = mlp_forward(net, raw, RunMode::kTrain, &cache);
  MatD d_phase;
  gain_loss_from_features<double>(raw, 1, 2, phases, &d_phase);
  const MlpGrads<double> grads = mlp_backward(net, cache, d_phase);
  const double h = 1e-5;
  for (std::size_t l = 0; l < 5; ++l) {
    auto& w = net.fc[l].weight;
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        const double saved = w(r, c);
        w(r, c) = saved + h;
        const double up = net_loss(net, raw, raw, 1, 2);
        w(r, c) = saved - h;
        const double down = net_loss(net, raw, raw, 1, 2);
        w(r, c) = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double analytic = grads.d_weight[l](r, c);
        const double denom =
            std::max({std::abs(numeric), std::abs(analytic), 1e-6});
        CHECK(std::abs(numeric - analytic) / denom < 1e-4);
      }
    }
  }
}

TEST_CASE("zero products give a zero phase-seed gradient") {
  MatD raw = MatD::Zero(3, feature_length(1, 2));
  // Only the direct link is set; every c_{i,n} = 0.
  raw(0, 4) = 1.0;
  MatD phases = MatD::Random(3, 2);
  MatD d_phase;
  gain_loss_from_features<double>(raw, 1, 2, phases, &d_phase);
  CHECK(d_phase.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("BN shift gradient is the column sum of the downstream gradient") {
  const auto spec = ArchitectureSpec::custom(1, 2, {4, 4, 4, 4, 2}, true);
  const Dataset d = unit_scale_dataset(1, 2, 8, 15);
  const MatD raw = raw_features_double(d);
  Philox rng(31);
  auto net = init_mlp<double>(spec, rng);
  ForwardCache<double> cache;
  const MatD phases = mlp_forward(net, raw, RunMode::kTrain, &cache);
  MatD d_phase;
  gain_loss_from_features<double>(raw, 1, 2, phases, &d_phase);
  const MlpGrads<double> grads = mlp_backward(net, cache, d_phase);
  // Recompute the layer-3 post-ReLU gradient by hand: out layer is linear.
  MatD d3 = d_phase * net.fc[4].weight;
  d3 = d3.cwiseProduct(
      (cache.inputs[4].array() > 0.0).cast<double>().matrix());
  CHECK((grads.d_beta[3] - d3.colwise().sum().transpose())
            .cwiseAbs()
            .maxCoeff() < 1e-10);
}

TEST_CASE("one-epoch training records one row and restores best weights") {
  const Dataset train_set = small_dataset(1, 2, 64, 1);
  const Dataset val_set = small_dataset(1, 2, 32, 2);
  const auto spec = ArchitectureSpec::custom(1, 2, {8, 8, 8, 8, 2}, true);
  TrainConfig config;
  config.batch_size = 16;
  config.max_epochs = 1;
  config.seed = 4;
  const TrainResult result = train(train_set, val_set, spec, config);
  CHECK(result.history.train_loss.size() == 1);
  CHECK(result.history.val_loss.size() == 1);
  CHECK(result.history.best_epoch == 0);
  CHECK(result.history.learning_rate[0] == config.init_lr);
}

TEST_CASE("training is bit-reproducible and bookkeeping is monotone") {
  const Dataset train_set = small_dataset(1, 2, 200, 10);
  const Dataset val_set = small_dataset(1, 2, 80, 11);
  const auto spec = ArchitectureSpec::custom(1, 2, {8, 8, 8, 8, 2}, true);
  TrainConfig config;
  config.batch_size = 32;
  config.max_epochs = 12;
  config.plateau_patience = 3;
  config.early_stop_patience = 8;
  config.seed = 21;
  const TrainResult a = train(train_set, val_set, spec, config);
  const TrainResult b = train(train_set, val_set, spec, config);
  CHECK(a.history.train_loss == b.history.train_loss);
  CHECK(a.history.val_loss == b.history.val_loss);
  CHECK(a.history.learning_rate == b.history.learning_rate);
  for (std::size_t l = 0; l < 5; ++l) {
    CHECK(a.params.net.fc[l].weight == b.params.net.fc[l].weight);
  }
  // Best epoch is the argmin of the validation history.
  const auto& val = a.history.val_loss;
  const auto min_it = std::min_element(val.begin(), val.end());
  CHECK(a.history.best_epoch ==
        static_cast<int>(std::distance(val.begin(), min_it)));
  // Learning rate never increases.
  for (std::size_t e = 1; e < a.history.learning_rate.size(); ++e) {
    CHECK(a.history.learning_rate[e] <= a.history.learning_rate[e - 1]);
  }
  // Dataset/spec mismatch is rejected.
  const Dataset wrong = small_dataset(2, 2, 32, 3);
  CHECK_THROWS_AS(train(wrong, val_set, spec, config), std::invalid_argument);
}

TEST_CASE("predict emits unit-modulus phases deterministically") {
  const Dataset train_set = small_dataset(1, 2, 128, 30);
  const Dataset val_set = small_dataset(1, 2, 64, 31);
  const auto spec = ArchitectureSpec::custom(1, 2, {8, 8, 8, 8, 2}, true);
  TrainConfig config;
  config.batch_size = 32;
  config.max_epochs = 3;
  config.seed = 30;
  const TrainResult result = train(train_set, val_set, spec, config);
  const auto ch = val_set.samples[0];
  const PhaseVector a = predict(result.params, ch);
  const PhaseVector b = predict(result.params, ch);
  a.validate();
  CHECK(a.theta == b.theta);
  const Dataset other = small_dataset(2, 2, 4, 1);
  CHECK_THROWS_AS(predict(result.params, other.samples[0]),
                  std::invalid_argument);
}

TEST_CASE("model file round trip preserves predictions byte for byte") {
  const Dataset train_set = small_dataset(2, 4, 128, 40);
  const Dataset val_set = small_dataset(2, 4, 64, 41);
  const auto spec = ArchitectureSpec::standard(2, 4);
  TrainConfig config;
  config.batch_size = 32;
  config.max_epochs = 2;
  config.seed = 40;
  const TrainResult result = train(train_set, val_set, spec, config);

  const std::string path1 = temp_path("risbf_model_a.bin");
  const std::string path2 = temp_path("risbf_model_b.bin");
  save_model(result.params, path1);
  const NetworkParams loaded = load_model(path1);
  CHECK(loaded.spec.layer_widths == result.params.spec.layer_widths);
  const auto ch = val_set.samples[0];
  CHECK(predict(loaded, ch).theta == predict(result.params, ch).theta);
  save_model(loaded, path2);
  std::ifstream f1(path1, std::ios::binary), f2(path2, std::ios::binary);
  const std::string b1{std::istreambuf_iterator<char>(f1), {}};
  const std::string b2{std::istreambuf_iterator<char>(f2), {}};
  CHECK(b1 == b2);

  // Corrupted magic is rejected.
  std::string bad = b1;
  bad[0] = 'X';
  std::ofstream(path1, std::ios::binary | std::ios::trunc) << bad;
  CHECK_THROWS_AS(load_model(path1), std::runtime_error);
  std::remove(path1.c_str());
  std::remove(path2.c_str());
}
