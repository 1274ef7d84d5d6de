#pragma once

#include <Eigen/Core>
#include <cstddef>

#include "risbf/channel.hpp"

namespace risbf {

/// Real feature layout, length 2(NM + M):
///   [Re(g_{1,1} h_{r,1}), Im(g_{1,1} h_{r,1}), ..., Re(g_{M,N} h_{r,N}),
///    Im(g_{M,N} h_{r,N}), Re(h_{d,1}), Im(h_{d,1}), ..., Im(h_{d,M})]
/// with the products ordered row-major over (antenna, element). Exposing the
/// element-wise products instead of G and h_r themselves bakes the bilinear
/// structure of the effective channel into the input.
struct FeatureVector {
  Eigen::VectorXd values;
};

constexpr std::size_t feature_length(int antennas, int elements) {
  return 2 * (static_cast<std::size_t>(elements) * antennas +
              static_cast<std::size_t>(antennas));
}

FeatureVector extract_features(const ChannelRealization& ch);

struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;
  double epsilon = 1e-8;  // divisor guard for zero-variance dimensions

  Eigen::VectorXd apply(const Eigen::VectorXd& values) const;
};

/// Per-dimension mean and population standard deviation over the training
/// features only. Throws std::invalid_argument on an empty dataset.
Standardizer fit_standardizer(const Dataset& train);

FeatureVector apply_standardizer(const Standardizer& s, const FeatureVector& f);

}  // namespace risbf
