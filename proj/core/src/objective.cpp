#include "risbf/objective.hpp"

#include <cmath>
#include <stdexcept>

namespace risbf {

void PhaseVector::validate(double tol) const {
  for (Eigen::Index n = 0; n < theta.size(); ++n) {
    if (std::abs(std::abs(theta(n)) - 1.0) > tol) {
      throw std::invalid_argument("PhaseVector: entry off the unit circle");
    }
  }
}

std::complex<double> unit_phase(std::complex<double> z) {
  const double mag = std::abs(z);
  if (mag == 0.0) return {1.0, 0.0};
  return z / mag;
}

Eigen::VectorXcd effective_channel(const ChannelRealization& ch,
                                   const PhaseVector& theta) {
  if (theta.theta.size() != ch.G.cols() || ch.h_r.size() != ch.G.cols() ||
      ch.h_d.size() != ch.G.rows()) {
    throw std::invalid_argument("effective_channel: dimension mismatch");
  }
  return ch.G * theta.theta.cwiseProduct(ch.h_r) + ch.h_d;
}

double channel_gain(const ChannelRealization& ch, const PhaseVector& theta) {
  return effective_channel(ch, theta).squaredNorm();
}

Eigen::VectorXcd mrt_beamformer(const ChannelRealization& ch,
                                const PhaseVector& theta, double p) {
  const Eigen::VectorXcd r = effective_channel(ch, theta);
  const double norm = r.norm();
  if (norm == 0.0) {
    throw std::domain_error("mrt_beamformer: effective channel is zero");
  }
  return std::sqrt(p) / norm * r.conjugate();
}

double receive_snr(const ChannelRealization& ch, const PhaseVector& theta,
                   const ScenarioConfig& config) {
  return config.power() / config.sigma2 * channel_gain(ch, theta);
}

double rate_bps_hz(double snr) { return std::log2(1.0 + snr); }

BeamformerOutput beamformer_output(const ChannelRealization& ch,
                                   const PhaseVector& theta,
                                   const ScenarioConfig& config) {
  BeamformerOutput out;
  out.gain = channel_gain(ch, theta);
  out.w = mrt_beamformer(ch, theta, config.power());
  out.snr = config.power() / config.sigma2 * out.gain;
  out.rate = rate_bps_hz(out.snr);
  return out;
}

}  // namespace risbf
