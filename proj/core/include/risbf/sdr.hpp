#pragma once

#include <Eigen/Core>
#include <vector>

#include "risbf/objective.hpp"
#include "risbf/rng.hpp"

namespace risbf {

/// Lifted form of the gain maximization: with C = G diag(h_r) and the
/// homogenizing variable t appended to theta,
///   R = [ C^H C    C^H h_d ]
///       [ h_d^H C     0    ]
/// and theta_bar^H R theta_bar + ||h_d||^2 equals the channel gain of the
/// de-homogenized phases for any unit-modulus theta_bar.
struct HomogenizedProblem {
  Eigen::MatrixXcd R;          // (N+1) x (N+1), Hermitian, zero last diagonal
  double h_d_norm_sq = 0.0;    // ||h_d||^2
};

struct SolverOptions {
  int trials = 100;        // randomization draws
  double tol = 1e-4;       // relative optimality target vs. oracles
  int restarts = 20;       // max random restarts of the factorized ascent
  int max_iters = 5000;    // ascent iterations per restart
  double rel_change_tol = 1e-7;  // ascent stop: relative objective change
};

struct SdrSolution {
  Eigen::MatrixXcd Q;                  // unit-diagonal PSD iterate
  double sdp_value = 0.0;              // tr(R Q)
  Eigen::VectorXcd theta_bar_best;     // best unit-modulus candidate
  std::vector<double> randomization_values;
  int iterations = 0;                  // total ascent iterations
  bool converged = false;
};

HomogenizedProblem build_homogenized(const ChannelRealization& ch);

/// Maximizes tr(RQ) over unit-diagonal PSD Q through the low-rank
/// factorization Q = V V^H with unit-norm rows of V (rank ceil(sqrt(2(N+1)))),
/// by projected gradient ascent with backtracking line search and random
/// restarts. Returns the best iterate with converged = false when no restart
/// met the tolerance within opts.max_iters.
SdrSolution solve_sdp(const HomogenizedProblem& prob, const SolverOptions& opts,
                      Philox& rng);

/// Draws trials samples from CN(0, Q), projects each element-wise to unit
/// modulus and keeps the candidate maximizing theta_bar^H R theta_bar.
void gaussian_randomize(SdrSolution& sol, const HomogenizedProblem& prob,
                        int trials, Philox& rng);

/// theta_n = Norm(theta_bar_n / theta_bar_{N+1}); a vanishing homogenizing
/// entry is treated as t = 1.
PhaseVector extract_theta(const Eigen::VectorXcd& theta_bar);

struct SdrResult {
  PhaseVector theta;
  SdrSolution solution;
};

/// build -> solve -> randomize -> extract. Solver non-convergence is reported
/// through solution.converged, never by throwing.
SdrResult sdr_beamform(const ChannelRealization& ch, const SolverOptions& opts,
                       Philox& rng);

}  // namespace risbf
