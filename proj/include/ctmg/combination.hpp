#pragma once

#include "ctmg/grid.hpp"
#include "ctmg/types.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <unordered_map>
#include <vector>

namespace ctmg {

struct SchemeEntry {
  LevelIndex level;
  int coefficient;  // (-1)^q * binom(d-1, q) where q is the layer of the level sum
};

/**
 * Combination scheme over anisotropic grids on a common box.
 *
 * build() enumerates the levels l >= L0 (component-wise) with |l|_1 = L + d - 1 - q for
 * q = 0..d-1 and attaches the alternating binomial coefficient of layer q. Layers that
 * the minimal level L0 empties out are permitted. Entries are sorted lexicographically
 * by level, and all accumulation loops over subproblems run in that order.
 */
class CombinationScheme {
 public:
  static CombinationScheme build(int d, int L, int L0, Box box);
  // Degenerate single-grid scheme with coefficient one; used by full-grid baselines.
  static CombinationScheme single_grid(LevelIndex level, Box box);

  int dim() const { return d_; }
  int target_level() const { return L_; }
  int minimal_level() const { return L0_; }
  const Box& box() const { return box_; }
  int count() const { return static_cast<int>(entries_.size()); }
  const std::vector<SchemeEntry>& entries() const { return entries_; }
  const AnisoGrid& grid(int i) const { return grids_[i]; }
  int coefficient(int i) const { return entries_[i].coefficient; }

  // Sum of coefficients; telescopes to one for any scheme with a non-empty top layer.
  int coefficient_sum() const;

 private:
  CombinationScheme() = default;
  int d_ = 0, L_ = 0, L0_ = 0;
  Box box_;
  std::vector<SchemeEntry> entries_;
  std::vector<AnisoGrid> grids_;
};

/**
 * Groups every (grid, node) pair of a scheme by spatial coordinate.
 *
 * Two nodes share a coordinate iff their dyadic positions agree exactly per dimension,
 * i.e. i_j * 2^{lmax - l_j} matches as an integer; no floating point comparison is
 * involved. A node of reduced dyadic level lam appears in exactly the scheme grids
 * whose level dominates lam, so each group lists those grids in scheme order.
 */
class SharedNodeMap {
 public:
  struct NodeRef {
    int grid;
    Index node;
  };

  explicit SharedNodeMap(const CombinationScheme& scheme);

  Index group_count() const { return static_cast<Index>(groups_.size()); }
  const std::vector<NodeRef>& group(Index g) const { return groups_[g]; }
  // Group that contains the given node; every node belongs to exactly one group.
  Index group_of(int grid, Index node) const { return group_index_[grid][node]; }
  const std::vector<NodeRef>& shared_with(int grid, Index node) const {
    return groups_[group_of(grid, node)];
  }

 private:
  std::vector<std::vector<NodeRef>> groups_;
  std::vector<std::vector<Index>> group_index_;
};

// Nodal samples of fn on every scheme grid.
BlockVector project_pointwise(const CombinationScheme& scheme,
                              const std::function<Real(const std::vector<Real>&)>& fn);

/**
 * Projects the per-grid states onto the sparse grid space in place: hierarchize each
 * state, replace every surplus by the coefficient-weighted sum over its shared-node
 * group (gathered in scheme order), and dehierarchize. Idempotent, and the identity on
 * families of states that interpolate one function representable on the minimal grid.
 */
void recombine(const CombinationScheme& scheme, const SharedNodeMap& map, BlockVector& states);

// Multilinear interpolation with implicit zero boundary values.
Real interpolate_on_grid(const AnisoGrid& grid, const Vector& values, const std::vector<Real>& x);

// Coefficient-weighted sum of the per-grid interpolants at x.
Real evaluate_combined(const CombinationScheme& scheme, const BlockVector& states,
                       const std::vector<Real>& x);

}  // namespace ctmg
