#pragma once

#include "ctmg/sfc_partition.hpp"
#include "ctmg/types.hpp"

#include <Eigen/SparseLU>

#include <memory>
#include <vector>

namespace ctmg {

enum class SchwarzVariant { one_level, additive, balanced };

/**
 * Two-level overlapping Schwarz preconditioner on a curve decomposition.
 *
 * The one-level part solves the operator restricted to each extended subdomain and
 * scatters the weighted solutions back. The coarse space has one degree of freedom
 * per disjoint-range curve chunk; its restriction sums nodal values over the chunk
 * and the coarse operator is the Galerkin product. The balanced variant projects
 * the one-level correction onto the complement of the coarse space:
 *
 *   one_level  C1' r = sum_i R_i' w_i inv(A_i) R_i r
 *   additive   C1' r + F r,              F = R0' inv(R0 A R0') R0
 *   balanced   G' C1' G r + F r,         G = I - A F
 *
 * Local and coarse factorizations happen once at construction; apply() only
 * substitutes. All needed decomposition data is copied in, so the decomposition
 * may be discarded afterwards. Subdomain solves run under parallel_for with one
 * output slot per subdomain and a fixed-order gather, keeping apply() bitwise
 * reproducible at any parallel degree.
 */
class SchwarzPreconditioner {
 public:
  SchwarzPreconditioner(SparseMat op, const SfcDecomposition& dec, SchwarzVariant variant);

  Vector apply(const Vector& r) const;
  Vector operator()(const Vector& r) const { return apply(r); }

  SchwarzVariant variant() const { return variant_; }
  int subdomain_count() const { return static_cast<int>(nodes_.size()); }
  const SparseMat& local_matrix(int i) const { return local_[i]; }
  const SparseMat& coarse_restriction() const { return R0_; }
  const SparseMat& coarse_matrix() const { return Ac_; }

 private:
  Vector one_level(const Vector& r) const;
  Vector coarse_solve(const Vector& r) const;
  Vector coarse_solve_transposed(const Vector& r) const;

  SparseMat op_;
  SchwarzVariant variant_;
  std::vector<std::vector<Index>> nodes_;
  std::vector<Real> weight_;
  std::vector<SparseMat> local_;
  std::vector<std::unique_ptr<Eigen::SparseLU<SparseMatCol>>> local_lu_;
  SparseMat R0_, R0T_;
  SparseMat opT_;  // built only for the balanced variant
  SparseMat Ac_;
  std::unique_ptr<Eigen::SparseLU<SparseMatCol>> coarse_lu_;
};

}  // namespace ctmg
