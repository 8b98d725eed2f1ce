#pragma once

#include "ctmg/grid.hpp"
#include "ctmg/hilbert.hpp"
#include "ctmg/types.hpp"

#include <vector>

namespace ctmg {

struct SubdomainCount {
  int count;
  bool degenerate;  // set when 2^S exceeds the grid size and the count clamps to one
};

// ceil(|grid| / 2^S): number of spatial subdomains at target subdomain size 2^S.
SubdomainCount choose_subdomain_count(const LevelIndex& level, int S);

// Uniform partition-of-unity weight 1/(n+1) for gamma = n/2. Non-half-integer overlaps
// have no uniform weight; callers fall back to the per-subdomain rule computed from the
// actual decomposition (see SfcDecomposition::weight).
Real overlap_weight(Real gamma);

/**
 * Overlapping decomposition of a grid into P contiguous Hilbert-curve ranges.
 *
 * Disjoint ranges split the curve exactly: P - r ranges of size floor(|grid|/P) followed
 * by r = |grid| - P*floor(|grid|/P) ranges one node larger. The extended range of
 * subdomain i widens its disjoint range by floor(gamma * disjoint_size(i)) curve
 * positions before and ceil(gamma * disjoint_size(i)) after, truncated at the curve
 * ends (no wrap-around). For gamma = n/2 and uniform range sizes every node is covered
 * by exactly n+1 extended subdomains away from the curve ends; truncation lowers the
 * count near the ends but never below one.
 *
 * Each subdomain also carries q coarse chunks: contiguous curve pieces of its disjoint
 * range with sizes floor(s/q) or one more for the leading s mod q chunks. Chunks of
 * different subdomains never share a node, which keeps the agglomerated coarse space
 * full rank.
 */
class SfcDecomposition {
 public:
  SfcDecomposition(const AnisoGrid& grid, int P, Real gamma, int q);

  int subdomain_count() const { return P_; }
  Real gamma() const { return gamma_; }
  int coarse_per_subdomain() const { return q_; }
  const HilbertOrder& order() const { return order_; }
  Index grid_size() const { return order_.size(); }

  Index disjoint_begin(int i) const { return dis_begin_[i]; }
  Index disjoint_end(int i) const { return dis_begin_[i + 1]; }
  Index extended_begin(int i) const { return ext_begin_[i]; }
  Index extended_end(int i) const { return ext_end_[i]; }
  Index extended_size(int i) const { return ext_end_[i] - ext_begin_[i]; }

  // Grid node indices of extended subdomain i, in curve order.
  const std::vector<Index>& nodes(int i) const { return nodes_[i]; }

  // Number of extended subdomains covering the given curve position.
  int coverage(Index curve_pos) const { return coverage_[curve_pos]; }

  // Per-subdomain partition-of-unity scalar: the uniform 1/(n+1) when gamma is a
  // half-integer, otherwise 1 / max coverage over the subdomain's disjoint range.
  Real weight(int i) const { return weight_[i]; }

  // Chunk boundaries within the disjoint range of subdomain i: q+1 offsets
  // relative to disjoint_begin(i).
  const std::vector<Index>& chunk_offsets(int i) const { return chunk_offsets_[i]; }

 private:
  int P_;
  Real gamma_;
  int q_;
  HilbertOrder order_;
  std::vector<Index> dis_begin_;
  std::vector<Index> ext_begin_, ext_end_;
  std::vector<std::vector<Index>> nodes_;
  std::vector<int> coverage_;
  std::vector<Real> weight_;
  std::vector<std::vector<Index>> chunk_offsets_;
};

}  // namespace ctmg
