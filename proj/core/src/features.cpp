#include "risbf/features.hpp"

#include <stdexcept>

namespace risbf {

FeatureVector extract_features(const ChannelRealization& ch) {
  const int antennas = ch.antennas();
  const int elements = ch.elements();
  FeatureVector f;
  f.values.resize(static_cast<Eigen::Index>(feature_length(antennas, elements)));
  Eigen::Index k = 0;
  for (int i = 0; i < antennas; ++i) {
    for (int n = 0; n < elements; ++n) {
      const std::complex<double> product = ch.G(i, n) * ch.h_r(n);
      f.values(k++) = product.real();
      f.values(k++) = product.imag();
    }
  }
  for (int i = 0; i < antennas; ++i) {
    f.values(k++) = ch.h_d(i).real();
    f.values(k++) = ch.h_d(i).imag();
  }
  return f;
}

Eigen::VectorXd Standardizer::apply(const Eigen::VectorXd& values) const {
  if (values.size() != mean.size()) {
    throw std::invalid_argument("Standardizer: length mismatch");
  }
  return ((values - mean).array() / (std.array() + epsilon)).matrix();
}

Standardizer fit_standardizer(const Dataset& train) {
  if (train.samples.empty()) {
    throw std::invalid_argument("fit_standardizer: empty dataset");
  }
  const Eigen::Index len = static_cast<Eigen::Index>(
      feature_length(train.config.M, train.config.N));
  // Welford's single-pass moments: exact zeros for constant dimensions, no
  // cancellation between large sums.
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(len);
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(len);
  double count = 0.0;
  for (const auto& sample : train.samples) {
    const FeatureVector f = extract_features(sample);
    if (f.values.size() != len) {
      throw std::invalid_argument("fit_standardizer: inconsistent sample shape");
    }
    count += 1.0;
    const Eigen::VectorXd delta = f.values - mean;
    mean += delta / count;
    m2 += delta.cwiseProduct(f.values - mean);
  }
  Standardizer s;
  s.mean = std::move(mean);
  s.std = (m2 / count).cwiseMax(0.0).cwiseSqrt();  // population std
  return s;
}

FeatureVector apply_standardizer(const Standardizer& s, const FeatureVector& f) {
  return FeatureVector{s.apply(f.values)};
}

}  // namespace risbf
