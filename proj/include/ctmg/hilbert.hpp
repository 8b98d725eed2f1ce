#pragma once

#include "ctmg/grid.hpp"
#include "ctmg/types.hpp"

#include <cstdint>
#include <vector>

namespace ctmg {

/**
 * d-dimensional Hilbert curve of a given order via the reflected-Gray-code construction.
 *
 * A point is a bit-vector word per dimension (bit j of a word belongs to axis j inside
 * the per-orthant logic; coordinates are passed as plain integers). The curve enters
 * every cube at a corner and traverses the 2^d orthants in Gray-code order; the entry
 * corner and traversal axis of each orthant follow from the standard entry/direction
 * recurrences, applied here bit-plane by bit-plane, most significant first. Orientation
 * is fixed by starting from entry 0, direction 0, which yields the classic U-shape in
 * 2D; the induced ordering is all that matters downstream.
 *
 * order*dim must stay below 63 so ranks fit in one word.
 */
std::uint64_t hilbert_encode(const std::vector<std::uint64_t>& coords, int order);
std::vector<std::uint64_t> hilbert_decode(int dim, int order, std::uint64_t rank);

// Gray-code helpers shared with the reference construction in the test suite.
namespace hilbert_detail {
std::uint64_t gray(std::uint64_t i);
std::uint64_t gray_inverse(std::uint64_t g);
std::uint64_t entry_corner(std::uint64_t w);             // e(w)
int intra_direction(std::uint64_t w, int dim);           // d(w)
std::uint64_t rol_bits(std::uint64_t x, int r, int dim);
std::uint64_t ror_bits(std::uint64_t x, int r, int dim);
}  // namespace hilbert_detail

/**
 * Curve ordering of the interior nodes of an anisotropic grid.
 *
 * Every node is placed at its virtual position i_j * 2^{lmax - l_j} on the isotropic
 * grid with 2^{lmax} cells per side, ranked along the Hilbert curve of order lmax, and
 * the real nodes are then densely renumbered in rank order. Positions of real nodes are
 * pairwise distinct, so the ordering is a permutation of the grid.
 */
class HilbertOrder {
 public:
  explicit HilbertOrder(const AnisoGrid& grid);

  Index size() const { return static_cast<Index>(node_at_.size()); }
  // Grid linear index of the node at the given curve position.
  Index node_at(Index curve_pos) const { return node_at_[curve_pos]; }
  // Curve position of the given grid node.
  Index position_of(Index node) const { return position_of_[node]; }

 private:
  std::vector<Index> node_at_;
  std::vector<Index> position_of_;
};

// Rank of one grid node on the virtual isotropic curve (not densely renumbered).
std::uint64_t hilbert_rank(const AnisoGrid& grid, Index node);

}  // namespace ctmg
