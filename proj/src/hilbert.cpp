#include "ctmg/hilbert.hpp"

#include "ctmg/parallel.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>

namespace ctmg {

namespace hilbert_detail {

std::uint64_t gray(std::uint64_t i) { return i ^ (i >> 1); }

std::uint64_t gray_inverse(std::uint64_t g) {
  std::uint64_t i = g;
  for (int shift = 1; shift < 64; shift <<= 1) i ^= i >> shift;
  return i;
}

std::uint64_t entry_corner(std::uint64_t w) {
  if (w == 0) return 0;
  return gray(2 * ((w - 1) / 2));
}

int intra_direction(std::uint64_t w, int dim) {
  if (w == 0) return 0;
  const std::uint64_t basis = (w % 2 == 0) ? w - 1 : w;
  return std::countr_one(basis) % dim;
}

std::uint64_t rol_bits(std::uint64_t x, int r, int dim) {
  r %= dim;
  if (r == 0) return x & ((std::uint64_t{1} << dim) - 1);
  const std::uint64_t mask = (std::uint64_t{1} << dim) - 1;
  return ((x << r) | (x >> (dim - r))) & mask;
}

std::uint64_t ror_bits(std::uint64_t x, int r, int dim) {
  r %= dim;
  return rol_bits(x, dim - r, dim);
}

}  // namespace hilbert_detail

using namespace hilbert_detail;

std::uint64_t hilbert_encode(const std::vector<std::uint64_t>& coords, int order) {
  const int dim = static_cast<int>(coords.size());
  if (dim < 1 || order < 1 || order * dim > 62)
    throw std::invalid_argument("hilbert_encode: dim/order out of range");
  for (auto c : coords)
    if (c >= (std::uint64_t{1} << order))
      throw std::invalid_argument("hilbert_encode: coordinate exceeds curve extent");

  std::uint64_t h = 0, e = 0;
  int d = 0;
  for (int plane = order - 1; plane >= 0; --plane) {
    std::uint64_t l = 0;
    for (int j = 0; j < dim; ++j) l |= ((coords[j] >> plane) & 1u) << j;
    l = ror_bits(l ^ e, d + 1, dim);
    const std::uint64_t w = gray_inverse(l);
    h = (h << dim) | w;
    e ^= rol_bits(entry_corner(w), d + 1, dim);
    d = (d + intra_direction(w, dim) + 1) % dim;
  }
  return h;
}

std::vector<std::uint64_t> hilbert_decode(int dim, int order, std::uint64_t rank) {
  if (dim < 1 || order < 1 || order * dim > 62)
    throw std::invalid_argument("hilbert_decode: dim/order out of range");
  if (rank >= (std::uint64_t{1} << (order * dim)))
    throw std::invalid_argument("hilbert_decode: rank exceeds curve length");

  std::vector<std::uint64_t> coords(dim, 0);
  std::uint64_t e = 0;
  int d = 0;
  for (int plane = order - 1; plane >= 0; --plane) {
    const std::uint64_t w = (rank >> (plane * dim)) & ((std::uint64_t{1} << dim) - 1);
    const std::uint64_t l = rol_bits(gray(w), d + 1, dim) ^ e;
    for (int j = 0; j < dim; ++j) coords[j] |= ((l >> j) & 1u) << plane;
    e ^= rol_bits(entry_corner(w), d + 1, dim);
    d = (d + intra_direction(w, dim) + 1) % dim;
  }
  return coords;
}

std::uint64_t hilbert_rank(const AnisoGrid& grid, Index node) {
  const int lmax = *std::max_element(grid.level().begin(), grid.level().end());
  const auto multi = grid.multi_index(node);
  std::vector<std::uint64_t> v(grid.dim());
  for (int j = 0; j < grid.dim(); ++j)
    v[j] = static_cast<std::uint64_t>(multi[j]) << (lmax - grid.level()[j]);
  return hilbert_encode(v, lmax);
}

HilbertOrder::HilbertOrder(const AnisoGrid& grid) {
  const Index n = grid.size();
  const int lmax = *std::max_element(grid.level().begin(), grid.level().end());
  std::vector<std::pair<std::uint64_t, Index>> ranked(n);
  std::vector<int> shift(grid.dim());
  for (int j = 0; j < grid.dim(); ++j) shift[j] = lmax - grid.level()[j];

  parallel_for(static_cast<std::size_t>(n), [&](std::size_t node) {
    const auto multi = grid.multi_index(static_cast<Index>(node));
    std::vector<std::uint64_t> v(grid.dim());
    for (int j = 0; j < grid.dim(); ++j)
      v[j] = static_cast<std::uint64_t>(multi[j]) << shift[j];
    ranked[node] = {hilbert_encode(v, lmax), static_cast<Index>(node)};
  });
  std::sort(ranked.begin(), ranked.end());

  node_at_.resize(n);
  position_of_.resize(n);
  for (Index pos = 0; pos < n; ++pos) {
    node_at_[pos] = ranked[pos].second;
    position_of_[ranked[pos].second] = pos;
  }
}

}  // namespace ctmg
