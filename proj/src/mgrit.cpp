#include "ctmg/mgrit.hpp"

#include "ctmg/parallel.hpp"

#include <stdexcept>
#include <utility>

namespace ctmg {

namespace {

BlockVector block_sub(BlockVector a, const BlockVector& b) {
  for (std::size_t g = 0; g < a.size(); ++g) a[g] -= b[g];
  return a;
}

BlockVector block_add(BlockVector a, const BlockVector& b) {
  for (std::size_t g = 0; g < a.size(); ++g) a[g] += b[g];
  return a;
}

Real block_norm_max(const BlockVector& v) {
  Real m = 0.0;
  for (const auto& comp : v) m = std::max(m, comp.norm());
  return m;
}

}  // namespace

std::vector<BlockVector> sequential_solve(const TimePropagator& prop, TimeWindow window,
                                          const BlockVector& u0) {
  if (window.first < 0 || window.last > prop.steps() || window.first >= window.last)
    throw std::invalid_argument("sequential_solve: window out of range");
  std::vector<BlockVector> traj(window.steps() + 1);
  traj[0] = u0;
  for (Index n = 1; n <= window.steps(); ++n)
    traj[n] = prop.step(window.first + n, traj[n - 1]);
  return traj;
}

std::vector<BlockVector> sequential_solve(const TimePropagator& prop, const BlockVector& u0) {
  return sequential_solve(prop, TimeWindow{0, prop.steps()}, u0);
}

MgritSolver::MgritSolver(const TimePropagator& fine, const TimePropagator& coarse,
                         const TimePartition& partition, TimeWindow window, BlockVector u0,
                         MgritOptions options)
    : fine_(&fine), coarse_(&coarse), c_(partition.coarsening()), window_(window),
      opt_(options) {
  if (c_ < 2) throw std::invalid_argument("MgritSolver: coarsening factor must be >= 2");
  if (fine.steps() != partition.steps() || coarse.steps() != partition.coarse_steps())
    throw std::invalid_argument("MgritSolver: propagator step counts do not match partition");
  if (fine.block_size() != coarse.block_size())
    throw std::invalid_argument("MgritSolver: fine and coarse block sizes differ");
  if (window_.first < 0 || window_.last > partition.steps() || window_.first >= window_.last)
    throw std::invalid_argument("MgritSolver: window out of range");
  if (window_.first % c_ != 0 || window_.steps() % c_ != 0)
    throw std::invalid_argument("MgritSolver: window endpoints must be C points");
  if (static_cast<int>(u0.size()) != fine.block_size())
    throw std::invalid_argument("MgritSolver: initial state block size mismatch");
  if (opt_.n_relax < 0 || opt_.tolerance <= 0.0 || opt_.max_iterations < 0)
    throw std::invalid_argument("MgritSolver: bad options");

  nc_ = window_.steps() / c_;
  coarse_offset_ = window_.first / c_;
  values_.assign(nc_ + 1, u0);  // broadcast of the initial condition as first guess
  values_[0] = std::move(u0);
  flast_.resize(nc_ + 1);
}

MgritSolver::MgritSolver(const TimePropagator& fine, const TimePropagator& coarse,
                         const TimePartition& partition, BlockVector u0, MgritOptions options)
    : MgritSolver(fine, coarse, partition, TimeWindow{0, partition.steps()}, std::move(u0),
                  options) {}

void MgritSolver::ensure_f_points() {
  if (flast_valid_) return;
  parallel_for(nc_, [&](Index i) {
    const Index m = i + 1;
    BlockVector v = values_[m - 1];
    for (Index n = (m - 1) * c_ + 1; n < m * c_; ++n) v = fine_->step(global_fine(n), v);
    flast_[m] = std::move(v);
  });
  flast_valid_ = true;
}

void MgritSolver::c_relax() {
  parallel_for(nc_, [&](Index i) {
    const Index m = i + 1;
    values_[m] = fine_->step(global_fine(m * c_), flast_[m]);
  });
  flast_valid_ = false;  // intervals now start from updated C values
}

Real MgritSolver::residual_norm() {
  ensure_f_points();
  Real worst = 0.0;
  std::vector<Real> norms(nc_ + 1, 0.0);
  parallel_for(nc_, [&](Index i) {
    const Index m = i + 1;
    norms[m] =
        block_norm_max(block_sub(fine_->step(global_fine(m * c_), flast_[m]), values_[m]));
  });
  for (Index m = 1; m <= nc_; ++m) worst = std::max(worst, norms[m]);
  return worst;
}

void MgritSolver::cycle() {
  ensure_f_points();
  for (int r = 0; r < opt_.n_relax; ++r) {
    c_relax();
    ensure_f_points();
  }

  std::vector<BlockVector> resid(nc_ + 1);
  parallel_for(nc_, [&](Index i) {
    const Index m = i + 1;
    resid[m] = block_sub(fine_->step(global_fine(m * c_), flast_[m]), values_[m]);
  });

  if (opt_.linear_error_correction) {
    BlockVector e(values_[0].size());
    for (std::size_t g = 0; g < e.size(); ++g) e[g] = Vector::Zero(values_[0][g].size());
    for (Index m = 1; m <= nc_; ++m) {
      e = block_add(coarse_->step_homogeneous(global_coarse(m), e), resid[m]);
      values_[m] = block_add(std::move(values_[m]), e);
    }
  } else {
    // Full approximation: v_m = Phi_c v_{m-1} + (u_m - Phi_c u_{m-1}) + r_m with u
    // the pre-correction C values, then inject v back.
    BlockVector v = values_[0];
    BlockVector prev_old = values_[0];
    for (Index m = 1; m <= nc_; ++m) {
      BlockVector old_m = values_[m];
      BlockVector tau = block_add(
          block_sub(old_m, coarse_->step_homogeneous(global_coarse(m), prev_old)), resid[m]);
      v = block_add(coarse_->step_homogeneous(global_coarse(m), v), tau);
      values_[m] = v;
      prev_old = std::move(old_m);
    }
  }
  flast_valid_ = false;
}

MgritReport MgritSolver::solve() {
  MgritReport rep;
  for (int it = 0;; ++it) {
    const Real res = residual_norm();
    rep.residual_history.push_back(res);
    rep.final_residual = res;
    rep.iterations = it;
    if (res <= opt_.tolerance) {
      rep.converged = true;
      return rep;
    }
    if (it == opt_.max_iterations) return rep;
    cycle();
  }
}

void MgritSolver::set_c_value(Index m, BlockVector v) {
  if (m < 1 || m > nc_) throw std::out_of_range("MgritSolver: C index");
  if (v.size() != values_[0].size())
    throw std::invalid_argument("MgritSolver: block size mismatch");
  values_[m] = std::move(v);
  flast_valid_ = false;
}

BlockVector MgritSolver::fine_value(Index n) const {
  if (n < 0 || n > window_.steps()) throw std::out_of_range("MgritSolver: fine index");
  const Index m = n / c_;
  BlockVector v = values_[m];
  for (Index k = m * c_ + 1; k <= n; ++k) v = fine_->step(global_fine(k), v);
  return v;
}

}  // namespace ctmg
