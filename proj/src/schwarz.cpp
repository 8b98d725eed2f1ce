#include "ctmg/schwarz.hpp"

#include "ctmg/parallel.hpp"

#include <stdexcept>

namespace ctmg {

SchwarzPreconditioner::SchwarzPreconditioner(SparseMat op, const SfcDecomposition& dec,
                                             SchwarzVariant variant)
    : op_(std::move(op)), variant_(variant) {
  const Index n = dec.grid_size();
  if (op_.rows() != n || op_.cols() != n)
    throw std::invalid_argument("SchwarzPreconditioner: operator size does not match grid");

  const int P = dec.subdomain_count();
  nodes_.resize(P);
  weight_.resize(P);
  for (int i = 0; i < P; ++i) {
    nodes_[i] = dec.nodes(i);
    weight_[i] = dec.weight(i);
  }

  local_.resize(P);
  local_lu_.resize(P);
  parallel_for(P, [&](Index i) {
    const auto& nd = nodes_[i];
    const Index m = static_cast<Index>(nd.size());
    std::vector<Index> global_to_local(n, -1);
    for (Index a = 0; a < m; ++a) global_to_local[nd[a]] = a;

    std::vector<Triplet> trips;
    for (Index a = 0; a < m; ++a)
      for (SparseMat::InnerIterator it(op_, nd[a]); it; ++it) {
        const Index lb = global_to_local[it.col()];
        if (lb >= 0) trips.emplace_back(a, lb, it.value());
      }
    local_[i] = SparseMat(m, m);
    local_[i].setFromTriplets(trips.begin(), trips.end());

    local_lu_[i] = std::make_unique<Eigen::SparseLU<SparseMatCol>>();
    local_lu_[i]->compute(SparseMatCol(local_[i]));
    if (local_lu_[i]->info() != Eigen::Success)
      throw std::runtime_error("SchwarzPreconditioner: singular subdomain matrix");
  });

  if (variant_ != SchwarzVariant::one_level) {
    const int q = dec.coarse_per_subdomain();
    std::vector<Triplet> trips;
    for (int i = 0; i < P; ++i) {
      const auto& off = dec.chunk_offsets(i);
      for (int c = 0; c < q; ++c)
        for (Index k = off[c]; k < off[c + 1]; ++k)
          trips.emplace_back(i * q + c, dec.order().node_at(dec.disjoint_begin(i) + k), 1.0);
    }
    R0_ = SparseMat(static_cast<Index>(P) * q, n);
    R0_.setFromTriplets(trips.begin(), trips.end());
    R0T_ = R0_.transpose();

    Ac_ = R0_ * op_ * R0T_;
    coarse_lu_ = std::make_unique<Eigen::SparseLU<SparseMatCol>>();
    coarse_lu_->compute(SparseMatCol(Ac_));
    if (coarse_lu_->info() != Eigen::Success)
      throw std::runtime_error("SchwarzPreconditioner: singular coarse matrix");
  }
  if (variant_ == SchwarzVariant::balanced) opT_ = op_.transpose();
}

Vector SchwarzPreconditioner::one_level(const Vector& r) const {
  const int P = subdomain_count();
  std::vector<Vector> sol(P);
  parallel_for(P, [&](Index i) {
    const auto& nd = nodes_[i];
    Vector rhs(nd.size());
    for (Index k = 0; k < rhs.size(); ++k) rhs[k] = r[nd[k]];
    sol[i] = local_lu_[i]->solve(rhs);
  });
  Vector z = Vector::Zero(r.size());
  for (int i = 0; i < P; ++i)
    for (Index k = 0; k < sol[i].size(); ++k) z[nodes_[i][k]] += weight_[i] * sol[i][k];
  return z;
}

Vector SchwarzPreconditioner::coarse_solve(const Vector& r) const {
  const Vector rc = R0_ * r;
  return R0T_ * Vector(coarse_lu_->solve(rc));
}

Vector SchwarzPreconditioner::coarse_solve_transposed(const Vector& r) const {
  const Vector rc = R0_ * r;
  return R0T_ * Vector(coarse_lu_->transpose().solve(rc));
}

Vector SchwarzPreconditioner::apply(const Vector& r) const {
  if (r.size() != op_.rows())
    throw std::invalid_argument("SchwarzPreconditioner: residual size mismatch");
  switch (variant_) {
    case SchwarzVariant::one_level:
      return one_level(r);
    case SchwarzVariant::additive:
      return one_level(r) + coarse_solve(r);
    case SchwarzVariant::balanced: {
      const Vector y = coarse_solve(r);
      const Vector z = r - op_ * y;
      const Vector w = one_level(z);
      const Vector v = w - coarse_solve_transposed(opT_ * w);
      return v + y;
    }
  }
  throw std::logic_error("SchwarzPreconditioner: unknown variant");
}

}  // namespace ctmg
