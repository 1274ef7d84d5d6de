#pragma once

#include <Eigen/Core>

#include "risbf/channel.hpp"

namespace risbf {

/// N unit-modulus reflection coefficients theta_n = e^{j phi_n}.
struct PhaseVector {
  Eigen::VectorXcd theta;

  int size() const { return static_cast<int>(theta.size()); }
  /// Throws std::invalid_argument if any | |theta_n| - 1 | exceeds tol.
  void validate(double tol = 1e-9) const;
};

/// Normalizes a complex scalar to unit modulus; maps 0 to 1 (any unit value
/// is equally valid for a vanishing coefficient).
std::complex<double> unit_phase(std::complex<double> z);

/// r_i = sum_n g_{i,n} h_{r,n} theta_n + h_{d,i}.
Eigen::VectorXcd effective_channel(const ChannelRealization& ch,
                                   const PhaseVector& theta);

/// || G diag(theta) h_r + h_d ||^2, the quantity every beamformer maximizes.
double channel_gain(const ChannelRealization& ch, const PhaseVector& theta);

/// Matched transmit vector w = sqrt(p) conj(r) / ||r||, so w^T = sqrt(p) r^H/||r||.
/// Throws std::domain_error when the effective channel vanishes.
Eigen::VectorXcd mrt_beamformer(const ChannelRealization& ch,
                                const PhaseVector& theta, double p);

/// Receive SNR under the matched beamformer: (p / sigma^2) * ||r||^2.
double receive_snr(const ChannelRealization& ch, const PhaseVector& theta,
                   const ScenarioConfig& config);

/// Spectral efficiency log2(1 + snr) in bits/s/Hz.
double rate_bps_hz(double snr);

struct BeamformerOutput {
  Eigen::VectorXcd w;
  double gain = 0.0;
  double snr = 0.0;
  double rate = 0.0;
};

BeamformerOutput beamformer_output(const ChannelRealization& ch,
                                   const PhaseVector& theta,
                                   const ScenarioConfig& config);

}  // namespace risbf
