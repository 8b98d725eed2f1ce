#include "ctmg/propagator.hpp"

#include "ctmg/krylov.hpp"
#include "ctmg/parallel.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace ctmg {

namespace {

int clamped_chunk_count(const SpatialSolverOptions& o, Index smallest_disjoint) {
  int q = o.coarse_per_subdomain;
  if (q <= 0) q = 1 << std::max(0, o.subdomain_exponent - 4);
  return static_cast<int>(std::min<Index>(q, smallest_disjoint));
}

}  // namespace

BackwardEulerPropagator::BackwardEulerPropagator(std::vector<SpatialOperator> ops,
                                                 const TimePartition& partition,
                                                 ForcingFn forcing,
                                                 SpatialSolverOptions options)
    : ops_(std::move(ops)), forcing_(std::move(forcing)), options_(options) {
  if (ops_.empty()) throw std::invalid_argument("BackwardEulerPropagator: empty block");
  if (!partition.uniform_dt())
    throw std::invalid_argument("BackwardEulerPropagator: only uniform partitions supported");
  if (options_.tolerance <= 0.0)
    throw std::invalid_argument("BackwardEulerPropagator: tolerance must be positive");

  times_.resize(partition.steps() + 1);
  for (Index n = 0; n <= partition.steps(); ++n) times_[n] = partition.time(n);
  dt_ = partition.dt(1);
  iteration_counts_ =
      std::make_unique<std::atomic<long long>[]>(options_.max_iterations + 1);

  const int B = block_size();
  shifted_.resize(B);
  decompositions_.resize(B);
  preconditioners_.resize(B);
  for (int g = 0; g < B; ++g) {
    shifted_[g] = shift_operator(ops_[g], dt_).mat;
    const auto& grid = ops_[g].grid;
    const auto count = choose_subdomain_count(grid.level(), options_.subdomain_exponent);
    const int q = clamped_chunk_count(options_, grid.size() / count.count);
    decompositions_[g] =
        std::make_unique<SfcDecomposition>(grid, count.count, options_.gamma, q);
    preconditioners_[g] = std::make_unique<SchwarzPreconditioner>(
        shifted_[g], *decompositions_[g], options_.variant);
  }
}

Vector BackwardEulerPropagator::solve_component(int g, Index n, const Vector& u_prev,
                                                bool with_forcing) const {
  const auto& grid = ops_[g].grid;
  if (u_prev.size() != grid.size())
    throw std::invalid_argument("BackwardEulerPropagator: state size mismatch");

  Vector rhs = u_prev / dt_;
  if (with_forcing && forcing_) {
    const Real t = times_[n];
    for (Index i = 0; i < grid.size(); ++i) rhs[i] += forcing_(grid.node_coordinate(i), t);
  }

  const SparseMat& A = shifted_[g];
  auto op = [&](const Vector& v) { return (A * v).eval(); };
  Vector x = u_prev;  // warm start: the previous value is a good guess at small dt
  const KrylovReport rep =
      options_.symmetric
          ? pcg(op, *preconditioners_[g], rhs, x, options_.tolerance, options_.max_iterations)
          : bicgstab(op, *preconditioners_[g], rhs, x, options_.tolerance,
                     options_.max_iterations);
  if (rep.status != KrylovStatus::converged)
    throw std::runtime_error("BackwardEulerPropagator: spatial solve failed at step " +
                             std::to_string(n) + " (residual " +
                             std::to_string(rep.residual_norm) + ")");

  solves_.fetch_add(1, std::memory_order_relaxed);
  total_iterations_.fetch_add(rep.iterations, std::memory_order_relaxed);
  iteration_counts_[std::min(rep.iterations, options_.max_iterations)].fetch_add(
      1, std::memory_order_relaxed);
  int peak = peak_iterations_.load(std::memory_order_relaxed);
  while (rep.iterations > peak &&
         !peak_iterations_.compare_exchange_weak(peak, rep.iterations,
                                                 std::memory_order_relaxed)) {
  }
  return x;
}

BlockVector BackwardEulerPropagator::step(Index n, const BlockVector& u_prev) const {
  if (n < 1 || n > steps()) throw std::out_of_range("BackwardEulerPropagator: step index");
  if (static_cast<int>(u_prev.size()) != block_size())
    throw std::invalid_argument("BackwardEulerPropagator: block size mismatch");
  BlockVector out(u_prev.size());
  for (int g = 0; g < block_size(); ++g) out[g] = solve_component(g, n, u_prev[g], true);
  return out;
}

BlockVector BackwardEulerPropagator::step_homogeneous(Index n, const BlockVector& u_prev) const {
  if (n < 1 || n > steps()) throw std::out_of_range("BackwardEulerPropagator: step index");
  if (static_cast<int>(u_prev.size()) != block_size())
    throw std::invalid_argument("BackwardEulerPropagator: block size mismatch");
  BlockVector out(u_prev.size());
  for (int g = 0; g < block_size(); ++g) out[g] = solve_component(g, n, u_prev[g], false);
  return out;
}

SolveStats BackwardEulerPropagator::stats() const {
  SolveStats s;
  s.solves = solves_.load();
  s.total_iterations = total_iterations_.load();
  s.peak_iterations = peak_iterations_.load();
  return s;
}

std::vector<long long> BackwardEulerPropagator::iteration_histogram() const {
  std::vector<long long> counts(options_.max_iterations + 1);
  for (int i = 0; i <= options_.max_iterations; ++i) counts[i] = iteration_counts_[i].load();
  return counts;
}

}  // namespace ctmg
