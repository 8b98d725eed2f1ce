#pragma once

#include "ctmg/schwarz.hpp"
#include "ctmg/time_grid.hpp"
#include "ctmg/types.hpp"

#include <atomic>
#include <functional>
#include <memory>
#include <vector>

namespace ctmg {

/**
 * One fine time step of a linear one-step method: u_n = Phi_n u_{n-1} + g_n.
 *
 * States are blocks of spatial vectors so that a coupled family of grids (one per
 * combination-scheme member) propagates through the same interface as a single
 * grid. Implementations must be safely shareable read-only across concurrent
 * callers; all mutable bookkeeping has to be thread-safe.
 */
class TimePropagator {
 public:
  virtual ~TimePropagator() = default;

  virtual int block_size() const = 0;
  virtual Index steps() const = 0;

  // Full step including the forcing contribution, fine index n in [1, steps].
  virtual BlockVector step(Index n, const BlockVector& u_prev) const = 0;

  // Homogeneous part Phi_n u_prev only. Coarse-grid corrections need the linear
  // part in isolation; forcing terms cancel in the FAS right-hand side.
  virtual BlockVector step_homogeneous(Index n, const BlockVector& u_prev) const = 0;
};

// Point forcing f(x, t); an empty function means a homogeneous equation.
using ForcingFn = std::function<Real(const std::vector<Real>&, Real)>;

struct SpatialSolverOptions {
  bool symmetric = true;  // selects CG (true) or BiCGStab (false)
  SchwarzVariant variant = SchwarzVariant::balanced;
  int subdomain_exponent = 10;  // S: target subdomain size 2^S nodes
  Real gamma = 0.5;
  int coarse_per_subdomain = 0;  // q; 0 picks 2^(S-4) clamped to the valid range
  Real tolerance = 1e-8;
  int max_iterations = 500;
};

struct SolveStats {
  long long solves = 0;
  long long total_iterations = 0;
  int peak_iterations = 0;
};

/**
 * Backward Euler over a block of spatial operators, each time step solved by a
 * Schwarz-preconditioned Krylov method.
 *
 * The step system (1/dt + L) u_n = u_{n-1}/dt + f(t_n) keeps the shifted operator
 * fixed across all steps of a uniform partition, so each block component gets
 * exactly one decomposition and one set of factorizations, built eagerly here and
 * immutable afterwards.
 */
class BackwardEulerPropagator final : public TimePropagator {
 public:
  BackwardEulerPropagator(std::vector<SpatialOperator> ops, const TimePartition& partition,
                          ForcingFn forcing, SpatialSolverOptions options);

  int block_size() const override { return static_cast<int>(ops_.size()); }
  Index steps() const override { return static_cast<Index>(times_.size()) - 1; }
  BlockVector step(Index n, const BlockVector& u_prev) const override;
  BlockVector step_homogeneous(Index n, const BlockVector& u_prev) const override;

  const AnisoGrid& grid(int g) const { return ops_[g].grid; }
  const SfcDecomposition& decomposition(int g) const { return *decompositions_[g]; }
  SolveStats stats() const;
  // counts[i] = number of spatial solves that took exactly i Krylov iterations
  std::vector<long long> iteration_histogram() const;

 private:
  Vector solve_component(int g, Index n, const Vector& u_prev, bool with_forcing) const;

  std::vector<SpatialOperator> ops_;  // the unshifted operators L
  std::vector<Real> times_;
  Real dt_;
  ForcingFn forcing_;
  SpatialSolverOptions options_;
  std::vector<SparseMat> shifted_;  // (1/dt) I + L
  std::vector<std::unique_ptr<SfcDecomposition>> decompositions_;
  std::vector<std::unique_ptr<SchwarzPreconditioner>> preconditioners_;
  mutable std::atomic<long long> solves_{0};
  mutable std::atomic<long long> total_iterations_{0};
  mutable std::atomic<int> peak_iterations_{0};
  mutable std::unique_ptr<std::atomic<long long>[]> iteration_counts_;
};

}  // namespace ctmg
