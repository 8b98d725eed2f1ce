#include "ctmg/combination.hpp"

#include "ctmg/hierarchical.hpp"
#include "ctmg/parallel.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>

namespace ctmg {

namespace {

long binom(int n, int k) {
  if (k < 0 || k > n) return 0;
  long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

void enumerate_layer(int d, int target_sum, int L0, LevelIndex& partial,
                     std::vector<LevelIndex>& out) {
  const int j = static_cast<int>(partial.size());
  if (j == d - 1) {
    const int last = target_sum - norm1(partial);
    if (last >= L0) {
      partial.push_back(last);
      out.push_back(partial);
      partial.pop_back();
    }
    return;
  }
  const int remaining_min = (d - 1 - j) * L0;
  for (int lj = L0; lj + remaining_min <= target_sum - norm1(partial); ++lj) {
    partial.push_back(lj);
    enumerate_layer(d, target_sum, L0, partial, out);
    partial.pop_back();
  }
}

// Dyadic key of one node coordinate: i * 2^{kKeyLevel - l} on a virtual level-kKeyLevel axis.
constexpr int kKeyLevel = 40;

std::uint64_t dyadic_position(Index i, int l) {
  return static_cast<std::uint64_t>(i) << (kKeyLevel - l);
}

struct NodeKey {
  std::array<std::uint64_t, 6> v{};
  bool operator==(const NodeKey&) const = default;
};

struct NodeKeyHash {
  std::size_t operator()(const NodeKey& k) const {
    std::uint64_t h = 1469598103934665603ull;
    for (std::uint64_t x : k.v) {
      h ^= x;
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }
};

}  // namespace

CombinationScheme CombinationScheme::build(int d, int L, int L0, Box box) {
  if (d < 1 || d > 6) throw std::invalid_argument("CombinationScheme: d out of range [1,6]");
  if (L0 < 1) throw std::invalid_argument("CombinationScheme: L0 must be at least 1");
  if (L0 > L) throw std::invalid_argument("CombinationScheme: L0 exceeds L");
  if (box.dim() != d) throw std::invalid_argument("CombinationScheme: box dimension mismatch");

  CombinationScheme s;
  s.d_ = d;
  s.L_ = L;
  s.L0_ = L0;
  s.box_ = box;
  for (int q = 0; q < d; ++q) {
    const int coeff = (q % 2 == 0 ? 1 : -1) * static_cast<int>(binom(d - 1, q));
    std::vector<LevelIndex> levels;
    LevelIndex partial;
    enumerate_layer(d, L + d - 1 - q, L0, partial, levels);
    for (auto& l : levels) s.entries_.push_back({std::move(l), coeff});
  }
  if (s.entries_.empty()) throw std::invalid_argument("CombinationScheme: no admissible levels");
  std::sort(s.entries_.begin(), s.entries_.end(),
            [](const SchemeEntry& a, const SchemeEntry& b) { return a.level < b.level; });
  for (const auto& e : s.entries_) s.grids_.emplace_back(e.level, s.box_);
  return s;
}

CombinationScheme CombinationScheme::single_grid(LevelIndex level, Box box) {
  CombinationScheme s;
  s.d_ = static_cast<int>(level.size());
  s.L_ = norm1(level) - s.d_ + 1;
  s.L0_ = *std::min_element(level.begin(), level.end());
  s.box_ = box;
  s.entries_.push_back({level, 1});
  s.grids_.emplace_back(s.entries_[0].level, s.box_);
  return s;
}

int CombinationScheme::coefficient_sum() const {
  int sum = 0;
  for (const auto& e : entries_) sum += e.coefficient;
  return sum;
}

SharedNodeMap::SharedNodeMap(const CombinationScheme& scheme) {
  std::unordered_map<NodeKey, Index, NodeKeyHash> group_of;
  group_index_.resize(scheme.count());
  for (int g = 0; g < scheme.count(); ++g) {
    const AnisoGrid& grid = scheme.grid(g);
    group_index_[g].resize(grid.size());
    std::vector<Index> multi(grid.dim(), 1);
    for (Index node = 0; node < grid.size(); ++node) {
      NodeKey key;
      for (int j = 0; j < grid.dim(); ++j)
        key.v[j] = dyadic_position(multi[j], grid.level()[j]);
      auto [it, inserted] = group_of.try_emplace(key, static_cast<Index>(groups_.size()));
      if (inserted) groups_.emplace_back();
      groups_[it->second].push_back({g, node});
      group_index_[g][node] = it->second;
      for (int j = 0; j < grid.dim(); ++j) {  // lexicographic advance, dimension 0 fastest
        if (++multi[j] <= grid.points_per_dim(j)) break;
        multi[j] = 1;
      }
    }
  }
}

BlockVector project_pointwise(const CombinationScheme& scheme,
                              const std::function<Real(const std::vector<Real>&)>& fn) {
  BlockVector states(scheme.count());
  parallel_for(scheme.count(), [&](std::size_t g) {
    const AnisoGrid& grid = scheme.grid(static_cast<int>(g));
    Vector v(grid.size());
    std::vector<Index> multi(grid.dim(), 1);
    std::vector<Real> x(grid.dim());
    for (Index node = 0; node < grid.size(); ++node) {
      for (int j = 0; j < grid.dim(); ++j)
        x[j] = grid.box().lo[j] + static_cast<Real>(multi[j]) * grid.mesh_width(j);
      v[node] = fn(x);
      for (int j = 0; j < grid.dim(); ++j) {
        if (++multi[j] <= grid.points_per_dim(j)) break;
        multi[j] = 1;
      }
    }
    states[g] = std::move(v);
  });
  return states;
}

void recombine(const CombinationScheme& scheme, const SharedNodeMap& map, BlockVector& states) {
  if (static_cast<int>(states.size()) != scheme.count())
    throw std::invalid_argument("recombine: state count does not match scheme");
  for (int g = 0; g < scheme.count(); ++g)
    if (states[g].size() != scheme.grid(g).size())
      throw std::invalid_argument("recombine: state length does not match grid");

  parallel_for(states.size(), [&](std::size_t g) { hierarchize(scheme.grid(static_cast<int>(g)), states[g]); });

  // Gather each group in scheme order, then broadcast the combined surplus back.
  parallel_for(static_cast<std::size_t>(map.group_count()), [&](std::size_t gi) {
    const auto& members = map.group(static_cast<Index>(gi));
    Real combined = 0.0;
    for (const auto& m : members) combined += scheme.coefficient(m.grid) * states[m.grid][m.node];
    for (const auto& m : members) states[m.grid][m.node] = combined;
  });

  parallel_for(states.size(), [&](std::size_t g) { dehierarchize(scheme.grid(static_cast<int>(g)), states[g]); });
}

Real interpolate_on_grid(const AnisoGrid& grid, const Vector& values, const std::vector<Real>& x) {
  if (static_cast<int>(x.size()) != grid.dim())
    throw std::invalid_argument("interpolate_on_grid: point dimension mismatch");
  const int d = grid.dim();
  std::vector<Index> cell(d);
  std::vector<Real> frac(d);
  for (int j = 0; j < d; ++j) {
    const Real lo = grid.box().lo[j], hi = grid.box().hi[j];
    if (x[j] < lo || x[j] > hi) throw std::out_of_range("interpolate_on_grid: point outside domain");
    const Index cells = grid.points_per_dim(j) + 1;
    Real s = (x[j] - lo) / grid.mesh_width(j);
    Index c = static_cast<Index>(s);
    if (c > cells - 1) c = cells - 1;
    cell[j] = c;
    frac[j] = s - static_cast<Real>(c);
  }
  Real result = 0.0;
  for (int corner = 0; corner < (1 << d); ++corner) {
    Real w = 1.0;
    Index lin = 0;
    bool interior = true;
    for (int j = 0; j < d; ++j) {
      const bool upper = (corner >> j) & 1;
      w *= upper ? frac[j] : 1.0 - frac[j];
      const Index idx = cell[j] + (upper ? 1 : 0);  // 0 and 2^l are boundary, value zero
      if (idx < 1 || idx > grid.points_per_dim(j)) {
        interior = false;
        break;
      }
      lin += (idx - 1) * grid.stride(j);
    }
    if (interior && w != 0.0) result += w * values[lin];
  }
  return result;
}

Real evaluate_combined(const CombinationScheme& scheme, const BlockVector& states,
                       const std::vector<Real>& x) {
  if (static_cast<int>(states.size()) != scheme.count())
    throw std::invalid_argument("evaluate_combined: state count does not match scheme");
  Real result = 0.0;
  for (int g = 0; g < scheme.count(); ++g)
    result += scheme.coefficient(g) * interpolate_on_grid(scheme.grid(g), states[g], x);
  return result;
}

}  // namespace ctmg
