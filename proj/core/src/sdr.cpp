#include "risbf/sdr.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace risbf {

namespace {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

double real_inner(const Matrix& a, const Matrix& b) {
  return a.cwiseProduct(b.conjugate()).sum().real();
}

void normalize_rows(Matrix& v) {
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    const double norm = v.row(r).norm();
    if (norm > 0.0) {
      v.row(r) /= norm;
    } else {
      v.row(r).setZero();
      v(r, 0) = 1.0;
    }
  }
}

struct AscentResult {
  double value = -std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

/// Maximizes tr(V^H R V) over unit-norm rows of V in place. The ascent
/// direction is the Euclidean gradient 2RV; each candidate is retracted by
/// row renormalization and accepted under an Armijo condition measured
/// against the tangent component of the gradient.
AscentResult ascend(const Matrix& r_matrix, Matrix& v,
                    const SolverOptions& opts) {
  AscentResult result;
  Matrix rv = r_matrix * v;
  double value = real_inner(v, rv);
  double step = 1.0;
  Matrix candidate, rv_candidate;
  for (int iter = 0; iter < opts.max_iters; ++iter) {
    ++result.iterations;
    const Matrix grad = 2.0 * rv;
    // Tangent projection per row: remove the radial component.
    Matrix grad_tan = grad;
    for (Eigen::Index r = 0; r < v.rows(); ++r) {
      const double radial = v.row(r).conjugate().cwiseProduct(grad.row(r)).sum().real();
      grad_tan.row(r) -= radial * v.row(r);
    }
    const double tan_norm_sq = grad_tan.squaredNorm();
    if (tan_norm_sq <= 1e-30) {
      result.converged = true;
      break;
    }
    double accepted_value = value;
    bool accepted = false;
    while (step >= 1e-18) {
      candidate = v + step * grad;
      normalize_rows(candidate);
      rv_candidate = r_matrix * candidate;
      accepted_value = real_inner(candidate, rv_candidate);
      if (accepted_value >= value + 1e-4 * step * tan_norm_sq) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      result.converged = true;  // no ascent direction left at machine scale
      break;
    }
    const double change = accepted_value - value;
    v.swap(candidate);
    rv.swap(rv_candidate);
    value = accepted_value;
    step = std::min(step * 1.3, 1e8);
    if (std::abs(change) <
        opts.rel_change_tol * std::max(std::abs(value), 1e-8)) {
      result.converged = true;
      break;
    }
  }
  result.value = value;
  return result;
}

}  // namespace

HomogenizedProblem build_homogenized(const ChannelRealization& ch) {
  if (ch.h_r.size() != ch.G.cols() || ch.h_d.size() != ch.G.rows()) {
    throw std::invalid_argument("build_homogenized: dimension mismatch");
  }
  const Eigen::Index n = ch.G.cols();
  // C = G diag(h_r); column n is g_n h_{r,n}.
  const Matrix c = ch.G * ch.h_r.asDiagonal();
  HomogenizedProblem prob;
  prob.R.resize(n + 1, n + 1);
  prob.R.topLeftCorner(n, n) = c.adjoint() * c;
  prob.R.topRightCorner(n, 1) = c.adjoint() * ch.h_d;
  prob.R.bottomLeftCorner(1, n) = ch.h_d.adjoint() * c;
  prob.R(n, n) = 0.0;
  // Exact Hermitian symmetry for downstream eigendecompositions.
  prob.R = ((prob.R + prob.R.adjoint()) / 2.0).eval();
  prob.h_d_norm_sq = ch.h_d.squaredNorm();
  return prob;
}

SdrSolution solve_sdp(const HomogenizedProblem& prob, const SolverOptions& opts,
                      Philox& rng) {
  const Eigen::Index n = prob.R.rows();
  if (prob.R.cols() != n) throw std::invalid_argument("solve_sdp: R not square");
  if ((prob.R - prob.R.adjoint()).cwiseAbs().maxCoeff() > 1e-9) {
    throw std::invalid_argument("solve_sdp: R not Hermitian");
  }
  if (opts.restarts < 1 || opts.max_iters < 1) {
    throw std::invalid_argument("solve_sdp: restarts and max_iters must be >= 1");
  }

  const auto p = static_cast<Eigen::Index>(
      std::ceil(std::sqrt(2.0 * static_cast<double>(n))));

  SdrSolution sol;
  Matrix best_v;
  double best_value = -std::numeric_limits<double>::infinity();
  bool best_converged = false;
  for (int restart = 0; restart < opts.restarts; ++restart) {
    Matrix v(n, p);
    for (Eigen::Index r = 0; r < n; ++r) {
      for (Eigen::Index c = 0; c < p; ++c) v(r, c) = rng.cnormal();
    }
    normalize_rows(v);
    const AscentResult run = ascend(prob.R, v, opts);
    sol.iterations += run.iterations;
    if (run.value > best_value) {
      best_value = run.value;
      best_v = v;
      best_converged = run.converged;
    }
  }

  sol.Q = best_v * best_v.adjoint();
  sol.sdp_value = best_value;
  sol.converged = best_converged;

  // Sanity bound for the relaxation: tr(RQ) <= (N+1) * lambda_max(R).
  Eigen::SelfAdjointEigenSolver<Matrix> eigs(prob.R,
                                             Eigen::EigenvaluesOnly);
  const double bound =
      static_cast<double>(n) * eigs.eigenvalues().maxCoeff();
  if (sol.sdp_value > bound + 1e-6 * std::max(1.0, std::abs(bound))) {
    throw std::logic_error("solve_sdp: objective exceeded the spectral bound");
  }
  return sol;
}

void gaussian_randomize(SdrSolution& sol, const HomogenizedProblem& prob,
                        int trials, Philox& rng) {
  if (trials < 1) {
    throw std::invalid_argument("gaussian_randomize: trials must be >= 1");
  }
  const Eigen::Index n = prob.R.rows();
  if (sol.Q.rows() != n || sol.Q.cols() != n) {
    throw std::invalid_argument("gaussian_randomize: Q shape mismatch");
  }

  // CN(0, Q) factor from the eigendecomposition, with small negative
  // eigenvalues clamped to zero (numerical PSD repair).
  Eigen::SelfAdjointEigenSolver<Matrix> eigs(sol.Q);
  Eigen::VectorXd lambda = eigs.eigenvalues();
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda(i) < 1e-9) lambda(i) = std::max(lambda(i), 0.0);
  }
  const Matrix factor =
      eigs.eigenvectors() * lambda.cwiseSqrt().asDiagonal();

  sol.randomization_values.clear();
  sol.randomization_values.reserve(static_cast<std::size_t>(trials));
  double best = -std::numeric_limits<double>::infinity();
  Vector draw(n), candidate(n);
  for (int t = 0; t < trials; ++t) {
    for (Eigen::Index i = 0; i < n; ++i) draw(i) = rng.cnormal();
    const Vector xi = factor * draw;
    for (Eigen::Index i = 0; i < n; ++i) candidate(i) = unit_phase(xi(i));
    const double value = (candidate.adjoint() * prob.R * candidate)(0).real();
    sol.randomization_values.push_back(value);
    if (value > best) {
      best = value;
      sol.theta_bar_best = candidate;
    }
  }
}

PhaseVector extract_theta(const Eigen::VectorXcd& theta_bar) {
  const Eigen::Index n = theta_bar.size() - 1;
  if (n < 1) throw std::invalid_argument("extract_theta: need N+1 entries");
  std::complex<double> t = theta_bar(n);
  if (std::abs(t) < 1e-15) t = 1.0;  // vanishing homogenizer: fix the gauge
  PhaseVector out;
  out.theta.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.theta(i) = unit_phase(theta_bar(i) / t);
  }
  return out;
}

SdrResult sdr_beamform(const ChannelRealization& ch, const SolverOptions& opts,
                       Philox& rng) {
  const HomogenizedProblem prob = build_homogenized(ch);
  SdrResult result;
  result.solution = solve_sdp(prob, opts, rng);
  gaussian_randomize(result.solution, prob, opts.trials, rng);
  result.theta = extract_theta(result.solution.theta_bar_best);
  return result;
}

}  // namespace risbf
