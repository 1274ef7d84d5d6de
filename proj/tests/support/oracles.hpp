#pragma once

// Independent reference implementations for tests. Everything here works on
// plain std::complex loops, deliberately avoiding the library's Eigen-based
// code paths so the two sides of each check stay independent.

#include <complex>
#include <cstddef>
#include <vector>

#include "risbf/channel.hpp"
#include "risbf/objective.hpp"

namespace risbf::oracle {

using Cplx = std::complex<double>;

/// Effective channel by naive triple loop.
inline std::vector<Cplx> effective_channel(const ChannelRealization& ch,
                                           const std::vector<Cplx>& theta) {
  const int m = ch.antennas();
  const int n = ch.elements();
  std::vector<Cplx> r(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    Cplx acc = ch.h_d(i);
    for (int k = 0; k < n; ++k) {
      acc += ch.G(i, k) * ch.h_r(k) * theta[static_cast<std::size_t>(k)];
    }
    r[static_cast<std::size_t>(i)] = acc;
  }
  return r;
}

inline double channel_gain(const ChannelRealization& ch,
                           const std::vector<Cplx>& theta) {
  double acc = 0.0;
  for (const Cplx& v : effective_channel(ch, theta)) acc += std::norm(v);
  return acc;
}

inline std::vector<Cplx> to_vector(const PhaseVector& theta) {
  return {theta.theta.data(), theta.theta.data() + theta.theta.size()};
}

/// Best gain over the discrete grid theta_n in {e^{j 2 pi k / levels}}.
/// Enumerates with partial sums, O(M) work per leaf.
class GridSearch {
 public:
  GridSearch(const ChannelRealization& ch, int levels)
      : m_(ch.antennas()), n_(ch.elements()), levels_(levels) {
    phases_.resize(static_cast<std::size_t>(levels));
    for (int k = 0; k < levels; ++k) {
      const double angle = 2.0 * 3.14159265358979323846 * k / levels;
      phases_[static_cast<std::size_t>(k)] = {std::cos(angle), std::sin(angle)};
    }
    products_.resize(static_cast<std::size_t>(m_ * n_));
    for (int i = 0; i < m_; ++i) {
      for (int k = 0; k < n_; ++k) {
        products_[static_cast<std::size_t>(i * n_ + k)] = ch.G(i, k) * ch.h_r(k);
      }
    }
    direct_.resize(static_cast<std::size_t>(m_));
    for (int i = 0; i < m_; ++i) direct_[static_cast<std::size_t>(i)] = ch.h_d(i);
  }

  /// Maximal gain over the full grid; optionally returns an argmax.
  double best_gain(std::vector<Cplx>* argmax = nullptr) {
    best_ = -1.0;
    partial_ = direct_;
    current_.assign(static_cast<std::size_t>(n_), Cplx(1.0, 0.0));
    best_theta_.clear();
    recurse(0);
    if (argmax != nullptr) *argmax = best_theta_;
    return best_;
  }

 private:
  void recurse(int element) {
    if (element == n_) {
      double gain = 0.0;
      for (const Cplx& v : partial_) gain += std::norm(v);
      if (gain > best_) {
        best_ = gain;
        best_theta_ = current_;
      }
      return;
    }
    const std::vector<Cplx> saved = partial_;
    for (int level = 0; level < levels_; ++level) {
      const Cplx phase = phases_[static_cast<std::size_t>(level)];
      for (int i = 0; i < m_; ++i) {
        partial_[static_cast<std::size_t>(i)] =
            saved[static_cast<std::size_t>(i)] +
            products_[static_cast<std::size_t>(i * n_ + element)] * phase;
      }
      current_[static_cast<std::size_t>(element)] = phase;
      recurse(element + 1);
    }
    partial_ = saved;
  }

  int m_;
  int n_;
  int levels_;
  std::vector<Cplx> phases_;
  std::vector<Cplx> products_;
  std::vector<Cplx> direct_;
  std::vector<Cplx> partial_;
  std::vector<Cplx> current_;
  std::vector<Cplx> best_theta_;
  double best_ = -1.0;
};

/// Best gain over `draws` uniformly random phase vectors.
inline double random_search_best(const ChannelRealization& ch, int draws,
                                 Philox& rng) {
  const int n = ch.elements();
  std::vector<Cplx> theta(static_cast<std::size_t>(n));
  double best = -1.0;
  for (int d = 0; d < draws; ++d) {
    for (int k = 0; k < n; ++k) {
      const double phi = rng.uniform(0.0, 2.0 * Philox::pi());
      theta[static_cast<std::size_t>(k)] = {std::cos(phi), std::sin(phi)};
    }
    best = std::max(best, channel_gain(ch, theta));
  }
  return best;
}

}  // namespace risbf::oracle
