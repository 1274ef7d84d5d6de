#pragma once

#include "risbf/objective.hpp"
#include "risbf/rng.hpp"

namespace risbf {

/// Exact optimum for the single-antenna case: each reflected term is rotated
/// onto the phase of the direct link, theta_n = Norm(h_d / (g_n h_{r,n})).
/// With h_d = 0 the terms are aligned to each other instead (reference phase
/// zero). Throws std::invalid_argument unless M = 1.
PhaseVector closed_form_single_antenna(const ChannelRealization& ch);

/// theta_n = e^{j phi_n}, phi_n iid Uniform[0, 2pi).
PhaseVector random_phase(Philox& rng, int n_elements);

}  // namespace risbf
