#include "ctmg/hierarchical.hpp"

#include <stdexcept>

namespace ctmg {

namespace {

// One line of 2^l - 1 interior values starting at base with the given element stride.
// Node positions are 1-based; position i belongs to dyadic level l - v2(i).
void hierarchize_line(Real* v, Index base, Index stride, int l) {
  const Index n = (Index{1} << l) - 1;
  for (int lam = l; lam >= 1; --lam) {
    const Index step = Index{1} << (l - lam);
    for (Index i = step; i <= n; i += 2 * step) {
      const Real left = (i - step >= 1) ? v[base + (i - step - 1) * stride] : 0.0;
      const Real right = (i + step <= n) ? v[base + (i + step - 1) * stride] : 0.0;
      v[base + (i - 1) * stride] -= 0.5 * (left + right);
    }
  }
}

void dehierarchize_line(Real* v, Index base, Index stride, int l) {
  const Index n = (Index{1} << l) - 1;
  for (int lam = 1; lam <= l; ++lam) {
    const Index step = Index{1} << (l - lam);
    for (Index i = step; i <= n; i += 2 * step) {
      const Real left = (i - step >= 1) ? v[base + (i - step - 1) * stride] : 0.0;
      const Real right = (i + step <= n) ? v[base + (i + step - 1) * stride] : 0.0;
      v[base + (i - 1) * stride] += 0.5 * (left + right);
    }
  }
}

template <typename LineFn>
void sweep(const AnisoGrid& grid, Vector& values, LineFn line) {
  if (values.size() != grid.size())
    throw std::invalid_argument("hierarchical transform: value length does not match grid size");
  Real* v = values.data();
  for (int j = 0; j < grid.dim(); ++j) {
    const Index nj = grid.points_per_dim(j);
    const Index stride = grid.stride(j);
    const Index block = stride * nj;       // elements spanned by one slab in dimension j
    const Index nblocks = grid.size() / block;
    for (Index b = 0; b < nblocks; ++b)
      for (Index pre = 0; pre < stride; ++pre) line(v, b * block + pre, stride, grid.level()[j]);
  }
}

}  // namespace

void hierarchize(const AnisoGrid& grid, Vector& values) { sweep(grid, values, hierarchize_line); }

void dehierarchize(const AnisoGrid& grid, Vector& values) { sweep(grid, values, dehierarchize_line); }

}  // namespace ctmg
