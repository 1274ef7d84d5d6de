#include "risbf/channel.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "risbf/parallel.hpp"

namespace risbf {

double ScenarioConfig::snr_linear() const {
  return std::pow(10.0, snr_db / 10.0);
}

double ScenarioConfig::power() const { return sigma2 * snr_linear(); }

void ScenarioConfig::validate() const {
  if (M < 1) throw std::invalid_argument("ScenarioConfig: M must be >= 1");
  if (N < 1) throw std::invalid_argument("ScenarioConfig: N must be >= 1");
  if (!(d_ar > 0.0)) throw std::invalid_argument("ScenarioConfig: d_ar must be > 0");
  if (!(d_ref > 0.0)) throw std::invalid_argument("ScenarioConfig: d_ref must be > 0");
  if (d0_min < 0.0 || d0_max < d0_min) {
    throw std::invalid_argument("ScenarioConfig: invalid d0 range");
  }
  if (d1_min < 0.0 || d1_max < d1_min) {
    throw std::invalid_argument("ScenarioConfig: invalid d1 range");
  }
  if (!(sigma2 > 0.0)) throw std::invalid_argument("ScenarioConfig: sigma2 must be > 0");
  if (!std::isfinite(snr_db)) throw std::invalid_argument("ScenarioConfig: snr_db must be finite");
}

double path_loss_db(double d, double d_ref) {
  if (!(d > 0.0) || !(d_ref > 0.0)) {
    throw std::domain_error("path_loss: distances must be positive");
  }
  return 20.4 * std::log10(d / d_ref);
}

double path_loss_linear(double d, double d_ref) {
  return std::pow(10.0, -path_loss_db(d, d_ref) / 10.0);
}

GeometrySample make_geometry(double d0, double d1, double d_ar) {
  GeometrySample g;
  g.d0 = d0;
  g.d1 = d1;
  g.d_au = std::sqrt(d0 * d0 + d1 * d1);
  g.d_ru = std::sqrt((d_ar - d0) * (d_ar - d0) + d1 * d1);
  return g;
}

GeometrySample sample_geometry(Philox& rng, const ScenarioConfig& config) {
  config.validate();
  const double d0 = rng.uniform(config.d0_min, config.d0_max);
  const double d1 = rng.uniform(config.d1_min, config.d1_max);
  return make_geometry(d0, d1, config.d_ar);
}

ChannelRealization sample_channels(Philox& rng, const GeometrySample& geometry,
                                   const ScenarioConfig& config) {
  config.validate();
  // Path loss enters as an amplitude on CN(0,1) entries, so the per-entry
  // power equals the linear gain exactly.
  const double amp_g = std::sqrt(path_loss_linear(config.d_ar, config.d_ref));
  const double amp_r = std::sqrt(path_loss_linear(geometry.d_ru, config.d_ref));
  const double amp_d = std::sqrt(path_loss_linear(geometry.d_au, config.d_ref));

  ChannelRealization ch;
  ch.geometry = geometry;
  ch.G.resize(config.M, config.N);
  for (int i = 0; i < config.M; ++i) {
    for (int n = 0; n < config.N; ++n) {
      ch.G(i, n) = amp_g * rng.cnormal();
    }
  }
  ch.h_r.resize(config.N);
  for (int n = 0; n < config.N; ++n) ch.h_r(n) = amp_r * rng.cnormal();
  ch.h_d.resize(config.M);
  for (int i = 0; i < config.M; ++i) ch.h_d(i) = amp_d * rng.cnormal();
  return ch;
}

Dataset generate_dataset(const ScenarioConfig& config, std::size_t count,
                         uint64_t seed, int threads) {
  config.validate();
  if (count == 0) {
    throw std::invalid_argument("generate_dataset: count must be >= 1");
  }
  Dataset dataset;
  dataset.config = config;
  dataset.seed = seed;
  dataset.samples.resize(count);
  parallel_for(count, threads, [&](std::size_t i) {
    Philox rng = make_stream(seed, StreamPurpose::kDatasetSample, i);
    const GeometrySample geometry = sample_geometry(rng, config);
    dataset.samples[i] = sample_channels(rng, geometry, config);
  });
  return dataset;
}

namespace {

constexpr char kMagic[4] = {'R', 'I', 'S', 'B'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error("dataset file: truncated");
  return value;
}

void write_complex(std::ostream& out, std::complex<double> z) {
  write_pod(out, z.real());
  write_pod(out, z.imag());
}

std::complex<double> read_complex(std::istream& in) {
  const double re = read_pod<double>(in);
  const double im = read_pod<double>(in);
  if (!std::isfinite(re) || !std::isfinite(im)) {
    throw std::runtime_error("dataset file: non-finite channel entry");
  }
  return {re, im};
}

}  // namespace

void save_dataset(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write(kMagic, sizeof(kMagic));
  write_pod<uint32_t>(out, kVersion);
  write_pod<uint32_t>(out, static_cast<uint32_t>(dataset.config.M));
  write_pod<uint32_t>(out, static_cast<uint32_t>(dataset.config.N));
  write_pod<uint64_t>(out, static_cast<uint64_t>(dataset.samples.size()));
  write_pod<uint64_t>(out, dataset.seed);
  for (const auto& sample : dataset.samples) {
    for (Eigen::Index i = 0; i < sample.G.rows(); ++i) {
      for (Eigen::Index n = 0; n < sample.G.cols(); ++n) {
        write_complex(out, sample.G(i, n));
      }
    }
    for (Eigen::Index n = 0; n < sample.h_r.size(); ++n) {
      write_complex(out, sample.h_r(n));
    }
    for (Eigen::Index i = 0; i < sample.h_d.size(); ++i) {
      write_complex(out, sample.h_d(i));
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  char magic[4];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("dataset file: bad magic: " + path);
  }
  const auto version = read_pod<uint32_t>(in);
  if (version != kVersion) {
    throw std::runtime_error("dataset file: unsupported version " +
                             std::to_string(version));
  }
  const auto m = read_pod<uint32_t>(in);
  const auto n = read_pod<uint32_t>(in);
  const auto count = read_pod<uint64_t>(in);
  const auto seed = read_pod<uint64_t>(in);
  if (m == 0 || n == 0) throw std::runtime_error("dataset file: zero dimension");

  Dataset dataset;
  dataset.config.M = static_cast<int>(m);
  dataset.config.N = static_cast<int>(n);
  dataset.seed = seed;
  dataset.samples.resize(count);
  for (auto& sample : dataset.samples) {
    sample.G.resize(m, n);
    for (uint32_t i = 0; i < m; ++i) {
      for (uint32_t k = 0; k < n; ++k) sample.G(i, k) = read_complex(in);
    }
    sample.h_r.resize(n);
    for (uint32_t k = 0; k < n; ++k) sample.h_r(k) = read_complex(in);
    sample.h_d.resize(m);
    for (uint32_t i = 0; i < m; ++i) sample.h_d(i) = read_complex(in);
  }
  return dataset;
}

}  // namespace risbf
