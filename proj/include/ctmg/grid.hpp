#pragma once

#include "ctmg/types.hpp"

#include <array>
#include <cassert>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace ctmg {

// Per-dimension dyadic refinement level. Component j produces 2^{l_j}-1 interior nodes.
using LevelIndex = std::vector<int>;

inline int norm1(const LevelIndex& l) { return std::accumulate(l.begin(), l.end(), 0); }

// true iff a >= b component-wise
inline bool dominates(const LevelIndex& a, const LevelIndex& b) {
  assert(a.size() == b.size());
  for (std::size_t j = 0; j < a.size(); ++j)
    if (a[j] < b[j]) return false;
  return true;
}

// Axis-aligned box [a_j, b_j] per dimension.
struct Box {
  std::vector<Real> lo;
  std::vector<Real> hi;

  static Box unit(int d) { return Box{std::vector<Real>(d, 0.0), std::vector<Real>(d, 1.0)}; }
  static Box cube(int d, Real a, Real b) {
    return Box{std::vector<Real>(d, a), std::vector<Real>(d, b)};
  }
  int dim() const { return static_cast<int>(lo.size()); }
};

/**
 * Anisotropic tensor grid on an affine box, interior nodes only.
 *
 * Node multi-indices are 1-based per dimension, i_j in [1, 2^{l_j}-1]; the boundary
 * layers i_j = 0 and i_j = 2^{l_j} carry implicit homogeneous Dirichlet values and are
 * never stored. Linear indices are lexicographic with dimension 0 varying fastest.
 */
class AnisoGrid {
 public:
  AnisoGrid(LevelIndex level, Box box) : level_(std::move(level)), box_(std::move(box)) {
    if (level_.empty() || box_.dim() != dim())
      throw std::invalid_argument("AnisoGrid: level/box dimension mismatch");
    npts_.resize(level_.size());
    h_.resize(level_.size());
    stride_.resize(level_.size());
    Index stride = 1;
    for (std::size_t j = 0; j < level_.size(); ++j) {
      if (level_[j] < 1 || level_[j] > 30)
        throw std::invalid_argument("AnisoGrid: level component out of range [1,30]");
      if (!(box_.hi[j] > box_.lo[j]))
        throw std::invalid_argument("AnisoGrid: degenerate box extent");
      npts_[j] = (Index{1} << level_[j]) - 1;
      h_[j] = (box_.hi[j] - box_.lo[j]) / static_cast<Real>(Index{1} << level_[j]);
      stride_[j] = stride;
      stride *= npts_[j];
    }
    size_ = stride;
  }

  int dim() const { return static_cast<int>(level_.size()); }
  const LevelIndex& level() const { return level_; }
  const Box& box() const { return box_; }
  Real mesh_width(int j) const { return h_[j]; }
  Index points_per_dim(int j) const { return npts_[j]; }
  Index stride(int j) const { return stride_[j]; }

  // Number of interior nodes, prod_j (2^{l_j} - 1).
  Index size() const { return size_; }

  Index linear_index(const std::vector<Index>& multi) const {
    assert(static_cast<int>(multi.size()) == dim());
    Index lin = 0;
    for (int j = 0; j < dim(); ++j) {
      if (multi[j] < 1 || multi[j] > npts_[j])
        throw std::out_of_range("AnisoGrid: multi-index component out of range");
      lin += (multi[j] - 1) * stride_[j];
    }
    return lin;
  }

  std::vector<Index> multi_index(Index linear) const {
    if (linear < 0 || linear >= size_) throw std::out_of_range("AnisoGrid: linear index out of range");
    std::vector<Index> multi(dim());
    for (int j = 0; j < dim(); ++j) {
      multi[j] = linear % npts_[j] + 1;
      linear /= npts_[j];
    }
    return multi;
  }

  std::vector<Real> node_coordinate(const std::vector<Index>& multi) const {
    assert(static_cast<int>(multi.size()) == dim());
    std::vector<Real> x(dim());
    for (int j = 0; j < dim(); ++j) {
      if (multi[j] < 1 || multi[j] > npts_[j])
        throw std::out_of_range("AnisoGrid: multi-index component out of range");
      x[j] = box_.lo[j] + static_cast<Real>(multi[j]) * h_[j];
    }
    return x;
  }

  std::vector<Real> node_coordinate(Index linear) const { return node_coordinate(multi_index(linear)); }

 private:
  LevelIndex level_;
  Box box_;
  std::vector<Index> npts_;
  std::vector<Real> h_;
  std::vector<Index> stride_;
  Index size_ = 0;
};

// Interior node count of the grid with the given level, without building it.
inline Index interior_count(const LevelIndex& level) {
  Index n = 1;
  for (int lj : level) {
    if (lj < 1 || lj > 30) throw std::invalid_argument("interior_count: level component out of range");
    n *= (Index{1} << lj) - 1;
  }
  return n;
}

// A sparse operator bound to the grid it was assembled on.
struct SpatialOperator {
  AnisoGrid grid;
  SparseMat mat;
};

// L + (1/dt) I, the backward Euler time-step operator for step size dt.
inline SpatialOperator shift_operator(const SpatialOperator& op, Real dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("shift_operator: dt must be positive");
  SparseMat shifted = op.mat;
  SparseMat eye(op.mat.rows(), op.mat.cols());
  eye.setIdentity();
  shifted += eye * (1.0 / dt);
  return SpatialOperator{op.grid, std::move(shifted)};
}

}  // namespace ctmg
