#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "risbf/rng.hpp"

namespace risbf {

/// Indoor downlink scenario: an M-antenna AP, an N-element reflecting
/// surface at distance d_ar from the AP, and a single-antenna user placed
/// uniformly at random in a strip below the AP-RIS axis.
struct ScenarioConfig {
  int M = 1;
  int N = 8;
  double d_ar = 8.0;     // AP-RIS distance [m]
  double d0_min = 0.0;   // user abscissa range [m]
  double d0_max = 8.0;
  double d1_min = 1.0;   // user perpendicular offset range [m]
  double d1_max = 6.0;
  double d_ref = 1.0;    // path-loss reference distance [m]
  double snr_db = 10.0;  // p / sigma^2 in dB
  double sigma2 = 1.0;   // noise power (linear)

  double snr_linear() const;
  /// Transmit power budget p = sigma^2 * 10^(snr_db/10).
  double power() const;

  /// Throws std::invalid_argument when any field violates its invariant.
  void validate() const;
};

struct GeometrySample {
  double d0 = 0.0;
  double d1 = 0.0;
  double d_au = 0.0;  // AP-user distance
  double d_ru = 0.0;  // RIS-user distance
};

GeometrySample make_geometry(double d0, double d1, double d_ar);

struct ChannelRealization {
  Eigen::MatrixXcd G;    // M x N, AP-RIS link
  Eigen::VectorXcd h_r;  // N, RIS-user link
  Eigen::VectorXcd h_d;  // M, AP-user direct link
  GeometrySample geometry;

  int antennas() const { return static_cast<int>(G.rows()); }
  int elements() const { return static_cast<int>(G.cols()); }
};

struct Dataset {
  ScenarioConfig config;
  std::vector<ChannelRealization> samples;
  uint64_t seed = 0;
};

/// Linear power gain 10^(-20.4*log10(d/d_ref)/10). Equals 1 at d = d_ref.
/// Throws std::domain_error on non-positive distances.
double path_loss_linear(double d, double d_ref);

/// The same attenuation in dB: 20.4 * log10(d / d_ref).
double path_loss_db(double d, double d_ref);

GeometrySample sample_geometry(Philox& rng, const ScenarioConfig& config);

/// Rayleigh small-scale fading: every entry is sqrt(path_loss) * CN(0,1)
/// with the loss of the corresponding link, all entries independent.
ChannelRealization sample_channels(Philox& rng, const GeometrySample& geometry,
                                   const ScenarioConfig& config);

/// count independent realizations, each from a fresh geometry draw. Sample i
/// consumes only the stream derived from (seed, i), so the result is a pure
/// function of (config, count, seed) for any worker count.
Dataset generate_dataset(const ScenarioConfig& config, std::size_t count,
                         uint64_t seed, int threads = 0);

/// Binary dataset file, little-endian:
///   "RISB" | version u32 | M u32 | N u32 | count u64 | seed u64 |
///   per sample: G row-major, h_r, h_d as (f64 re, f64 im) pairs.
void save_dataset(const Dataset& dataset, const std::string& path);

/// Rejects wrong magic, version, shapes, and non-finite payloads.
Dataset load_dataset(const std::string& path);

}  // namespace risbf
