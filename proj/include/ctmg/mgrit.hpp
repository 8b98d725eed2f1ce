#pragma once

#include "ctmg/propagator.hpp"
#include "ctmg/time_grid.hpp"
#include "ctmg/types.hpp"

#include <vector>

namespace ctmg {

struct MgritOptions {
  int n_relax = 1;  // CF sweeps after the leading F-relaxation (1 = FCF)
  // Solve the coarse system for the error instead of the full approximation.
  // Algebraically identical on linear problems; exists so tests can assert that.
  bool linear_error_correction = false;
  Real tolerance = 1e-8;
  int max_iterations = 100;
};

struct MgritReport {
  bool converged = false;
  int iterations = 0;   // two-level cycles performed
  Real final_residual = 0.0;
  std::vector<Real> residual_history;  // residual before each cycle, plus the final value
};

// Exact forward substitution of the one-step recurrence; the reference every
// multigrid result is measured against. Returns all window states including u0.
std::vector<BlockVector> sequential_solve(const TimePropagator& prop, TimeWindow window,
                                          const BlockVector& u0);
std::vector<BlockVector> sequential_solve(const TimePropagator& prop, const BlockVector& u0);

/**
 * Two-level multigrid reduction in time over a window of a fine partition.
 *
 * Stores the solution only at C points; F values are rebuilt on demand by
 * propagating from the owning C point, which is also how prolongation happens.
 * One cycle runs F-relaxation, n_relax CF sweeps, computes C-point residuals,
 * solves the coarse full-approximation system by exact sequential stepping with
 * the coarse propagator's homogeneous part (forcing cancels in the FAS right side),
 * and injects the coarse solution back.
 *
 * The residual measure is the max over C points of the spatial l2 norm per block
 * component. Relaxation phases run intervals in parallel with one slot per
 * interval and fixed-order reductions, so every number is reproducible bit for
 * bit at any parallel degree.
 *
 * The window's endpoints must be C points of the global partition; the coarse
 * propagator is indexed on the global coarse step numbering.
 */
class MgritSolver {
 public:
  MgritSolver(const TimePropagator& fine, const TimePropagator& coarse,
              const TimePartition& partition, TimeWindow window, BlockVector u0,
              MgritOptions options = {});
  MgritSolver(const TimePropagator& fine, const TimePropagator& coarse,
              const TimePartition& partition, BlockVector u0, MgritOptions options = {});

  Index coarse_points() const { return nc_; }
  Index window_steps() const { return window_.steps(); }
  const BlockVector& c_value(Index m) const { return values_[m]; }
  // Seed a C-point value (warm starts and fixed-point tests); m >= 1.
  void set_c_value(Index m, BlockVector v);
  // Window-local fine index in [0, window_steps()]; F values are reconstructed.
  BlockVector fine_value(Index n) const;

  Real residual_norm();
  void cycle();
  MgritReport solve();

 private:
  Index global_fine(Index local) const { return window_.first + local; }
  Index global_coarse(Index m) const { return coarse_offset_ + m; }
  void ensure_f_points();
  void c_relax();

  const TimePropagator* fine_;
  const TimePropagator* coarse_;
  int c_;
  TimeWindow window_;
  Index nc_;
  Index coarse_offset_;
  MgritOptions opt_;
  std::vector<BlockVector> values_;  // C-point states, [0] is the initial condition
  std::vector<BlockVector> flast_;   // last F value of each coarse interval
  bool flast_valid_ = false;
};

}  // namespace ctmg
