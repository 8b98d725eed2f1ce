#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <vector>

namespace ctmg {

using Real = double;
using Index = std::int64_t;

using Vector = Eigen::VectorXd;
// Row-compressed storage; column-major copies are made where a factorization needs them.
using SparseMat = Eigen::SparseMatrix<Real, Eigen::RowMajor>;
using SparseMatCol = Eigen::SparseMatrix<Real, Eigen::ColMajor>;
using Triplet = Eigen::Triplet<Real>;

// One spatial vector per subproblem, ordered as the owning scheme orders its grids.
using BlockVector = std::vector<Vector>;

}  // namespace ctmg
