#include "ctmg/sfc_partition.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ctmg {

SubdomainCount choose_subdomain_count(const LevelIndex& level, int S) {
  if (S < 0 || S > 62) throw std::invalid_argument("choose_subdomain_count: S out of range");
  const Index n = interior_count(level);
  const Index target = Index{1} << S;
  if (target >= n) return {1, target > n};
  return {static_cast<int>((n + target - 1) / target), false};
}

Real overlap_weight(Real gamma) {
  if (gamma < 0.0) throw std::invalid_argument("overlap_weight: gamma must be non-negative");
  const Real two_gamma = 2.0 * gamma;
  const Real n = std::round(two_gamma);
  if (std::abs(two_gamma - n) > 1e-12)
    throw std::invalid_argument(
        "overlap_weight: gamma is not a half-integer; use the decomposition's general rule");
  return 1.0 / (n + 1.0);
}

SfcDecomposition::SfcDecomposition(const AnisoGrid& grid, int P, Real gamma, int q)
    : P_(P), gamma_(gamma), q_(q), order_(grid) {
  const Index n = order_.size();
  if (P < 1 || static_cast<Index>(P) > n)
    throw std::invalid_argument("SfcDecomposition: P out of range [1, grid size]");
  if (gamma < 0.0) throw std::invalid_argument("SfcDecomposition: gamma must be non-negative");
  if (q < 1) throw std::invalid_argument("SfcDecomposition: q must be at least 1");

  // Exact split: P - r ranges of size floor(n/P), then r = n - P*floor(n/P) larger ones.
  const Index base = n / P;
  const Index r = n - static_cast<Index>(P) * base;
  dis_begin_.resize(P + 1);
  dis_begin_[0] = 0;
  for (int i = 0; i < P; ++i)
    dis_begin_[i + 1] = dis_begin_[i] + base + (i >= P - static_cast<int>(r) ? 1 : 0);

  // The two overlap slices split 2*gamma*size as floor/ceil so the extension adds
  // exactly ceil(2*gamma*size) nodes; a symmetric ceil would over-cover odd-sized
  // ranges (grid sizes prod(2^l - 1) are always odd).
  ext_begin_.resize(P);
  ext_end_.resize(P);
  for (int i = 0; i < P; ++i) {
    const Index size = dis_begin_[i + 1] - dis_begin_[i];
    const Index left = static_cast<Index>(std::floor(gamma * static_cast<Real>(size)));
    const Index right = static_cast<Index>(std::ceil(gamma * static_cast<Real>(size)));
    ext_begin_[i] = std::max<Index>(0, dis_begin_[i] - left);
    ext_end_[i] = std::min<Index>(n, dis_begin_[i + 1] + right);
    if (static_cast<Index>(q) > size)
      throw std::invalid_argument("SfcDecomposition: q exceeds a disjoint subdomain size");
  }

  coverage_.assign(n, 0);
  for (int i = 0; i < P; ++i)
    for (Index pos = ext_begin_[i]; pos < ext_end_[i]; ++pos) ++coverage_[pos];

  const Real two_gamma = 2.0 * gamma;
  const bool half_integer = std::abs(two_gamma - std::round(two_gamma)) <= 1e-12;
  weight_.resize(P);
  for (int i = 0; i < P; ++i) {
    if (half_integer) {
      weight_[i] = 1.0 / (std::round(two_gamma) + 1.0);
    } else {
      int max_cov = 1;
      for (Index pos = dis_begin_[i]; pos < dis_begin_[i + 1]; ++pos)
        max_cov = std::max(max_cov, coverage_[pos]);
      weight_[i] = 1.0 / static_cast<Real>(max_cov);
    }
  }

  nodes_.resize(P);
  chunk_offsets_.resize(P);
  for (int i = 0; i < P; ++i) {
    const Index ext_size = ext_end_[i] - ext_begin_[i];
    nodes_[i].resize(ext_size);
    for (Index k = 0; k < ext_size; ++k) nodes_[i][k] = order_.node_at(ext_begin_[i] + k);

    // Chunks agglomerate the disjoint range. Chunking the overlapped range instead
    // would duplicate indicator rows between equal-sized neighbors whenever the
    // chunk stride divides the subdomain stride (it does at the default q), making
    // the coarse Galerkin matrix exactly singular. Disjoint chunks are orthogonal
    // by construction, so the coarse space always has full rank.
    const Index size = dis_begin_[i + 1] - dis_begin_[i];
    const Index cbase = size / q;
    const Index crem = size % q;
    chunk_offsets_[i].resize(q + 1);
    chunk_offsets_[i][0] = 0;
    for (int c = 0; c < q; ++c)
      chunk_offsets_[i][c + 1] = chunk_offsets_[i][c] + cbase + (c < static_cast<int>(crem) ? 1 : 0);
  }
}

}  // namespace ctmg
