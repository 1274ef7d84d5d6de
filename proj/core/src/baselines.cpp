#include "risbf/baselines.hpp"

#include <stdexcept>

namespace risbf {

PhaseVector closed_form_single_antenna(const ChannelRealization& ch) {
  if (ch.antennas() != 1) {
    throw std::invalid_argument(
        "closed_form_single_antenna: requires a single-antenna channel");
  }
  const int n_elements = ch.elements();
  const std::complex<double> h_d = ch.h_d(0);
  PhaseVector out;
  out.theta.resize(n_elements);
  const bool direct_link_present = std::abs(h_d) > 0.0;
  for (int n = 0; n < n_elements; ++n) {
    const std::complex<double> c = ch.G(0, n) * ch.h_r(n);
    if (direct_link_present) {
      // Rotate every reflected term onto the direct link's phase.
      out.theta(n) = std::abs(c) > 0.0 ? unit_phase(h_d / c)
                                       : std::complex<double>(1.0, 0.0);
    } else {
      // No direct link: align the terms to each other at reference phase 0.
      out.theta(n) = unit_phase(std::conj(c));
    }
  }
  return out;
}

PhaseVector random_phase(Philox& rng, int n_elements) {
  if (n_elements < 1) {
    throw std::invalid_argument("random_phase: N must be >= 1");
  }
  PhaseVector out;
  out.theta.resize(n_elements);
  for (int n = 0; n < n_elements; ++n) {
    const double phi = rng.uniform(0.0, 2.0 * Philox::pi());
    out.theta(n) = {std::cos(phi), std::sin(phi)};
  }
  return out;
}

}  // namespace risbf
