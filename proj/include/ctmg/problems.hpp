#pragma once

#include "ctmg/grid.hpp"

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <map>
#include <vector>

namespace ctmg {

// ---------------------------------------------------------------------------
// Heat equation with a known solution
// ---------------------------------------------------------------------------

// u*(x,t) = sqrt(|x|^2 + t^2) e^{-t} prod_i sin(pi x_i) on [0,1]^d. Vanishes on
// the boundary, so it is compatible with homogeneous Dirichlet conditions.
Real heat_exact_solution(const std::vector<Real>& x, Real t);

// f = du*/dt - lap(u*), derived in closed form. Guarded by a finite-difference
// consistency test; do not simplify without rerunning it.
Real heat_forcing(const std::vector<Real>& x, Real t);

struct HeatProblem {
  int d = 2;
  Real t_end = 1.0;
  Box box() const { return Box::unit(d); }
};

// Second-order central differences for -lap with homogeneous Dirichlet
// boundary. Symmetric positive definite.
SpatialOperator assemble_heat_operator(const AnisoGrid& grid);

// ---------------------------------------------------------------------------
// Density evolution of linear SDEs  dX = theta X dt + sigma dW
// ---------------------------------------------------------------------------

struct LinearSdeProblem {
  Eigen::MatrixXd theta;  // d x d drift
  Eigen::MatrixXd sigma;  // d x m noise coupling
  Eigen::MatrixXd noise;  // m x m, autocorrelation E[W(t+s) W(t)^T] = 2 noise delta(s)
  Eigen::VectorXd mean0;  // initial Gaussian
  Eigen::MatrixXd cov0;
  Box box;                // truncated computational domain

  int dimension() const { return static_cast<int>(theta.rows()); }
  // H = 2 sigma D sigma^T, the diffusion matrix of the density equation.
  Eigen::MatrixXd diffusion() const { return 2.0 * sigma * noise * sigma.transpose(); }
};

// Mass-spring-damper with one mass; dimensions are position and velocity.
LinearSdeProblem damped_oscillator();
// Two masses coupled by a third spring; positions x1, x3 and velocities x2, x4.
LinearSdeProblem coupled_oscillators();

// L u = sum_i d_i[(theta x)_i u] - 1/2 sum_ij H_ij d2_ij u, signed so the
// density satisfies du/dt + L u = 0. Central differences throughout, drift in
// divergence form (the product (theta x)_i u is differenced, not expanded).
// Generally non-symmetric.
SpatialOperator assemble_fokker_planck_operator(const AnisoGrid& grid,
                                                const LinearSdeProblem& problem);

struct GaussianState {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;

  Real density(const std::vector<Real>& x) const;
};

// Exact distribution of the linear SDE at time t >= 0: mean e^{theta t} M,
// covariance from dS/dt = theta S + S theta^T + H integrated with a classical
// 4th-order scheme at step <= 1e-3 (oracle-grade accuracy).
GaussianState gaussian_solution(const LinearSdeProblem& problem, Real t);

// Solves theta S + S theta^T + H = 0; the stationary covariance when theta is
// stable. Small dense systems only (d^2 x d^2 solve).
Eigen::MatrixXd stationary_covariance(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& H);

// ---------------------------------------------------------------------------
// Reaction networks, drift-diffusion approximation of the master equation
// ---------------------------------------------------------------------------

using PropensityFn = std::function<Real(const std::vector<Real>&)>;

struct Reaction {
  std::vector<int> stoichiometry;  // state change nu per firing
  PropensityFn propensity;         // alpha(x) >= 0 on the domain
};

struct CmeProblem {
  std::vector<Reaction> reactions;
  Eigen::VectorXd mean0;  // initial Gaussian on the embedded domain
  Eigen::MatrixXd cov0;
  Box box;

  int dimension() const { return box.dim(); }
};

// Two mutually repressing species; bistable with modes near (224, 49) and
// (49, 224) on [0, 399]^2.
CmeProblem toggle_switch_2d();
// Three-species extension; tristable on [0, 199]^3.
CmeProblem toggle_switch_3d();

// L u = sum_r ( nu_r . grad[alpha_r u] - 1/2 nu_r^T (grad grad [alpha_r u]) nu_r ),
// signed so that du/dt + L u = 0. Central differences of the products
// alpha_r(x) u(x) with the propensity evaluated at node coordinates.
SpatialOperator assemble_cme_operator(const AnisoGrid& grid, const CmeProblem& problem);

// Direct-method stochastic simulation on the integer lattice. Returns the
// final-state histogram over all trajectories, normalized to a probability
// mass function. Trajectories draw from independent streams seeded by
// (seed, trajectory index), so results do not depend on the parallel degree.
std::map<std::vector<int>, Real> gillespie_ssa(const CmeProblem& problem,
                                               const std::vector<int>& x0, Real t_end,
                                               int trajectories, std::uint64_t seed);

}  // namespace ctmg
