#include "ctmg/problems.hpp"

#include "ctmg/parallel.hpp"

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace ctmg {

namespace {

constexpr Real kPi = std::numbers::pi_v<Real>;

Real radius(const std::vector<Real>& x, Real t) {
  Real s = t * t;
  for (Real xi : x) s += xi * xi;
  return std::sqrt(s);
}

}  // namespace

Real heat_exact_solution(const std::vector<Real>& x, Real t) {
  Real prod = 1.0;
  for (Real xi : x) prod *= std::sin(kPi * xi);
  return radius(x, t) * std::exp(-t) * prod;
}

Real heat_forcing(const std::vector<Real>& x, Real t) {
  const int d = static_cast<int>(x.size());
  const Real r = radius(x, t);
  // r >= min_i x_i > 0 for interior x, so the 1/r powers below are safe.
  std::vector<Real> sines(d), cosines(d);
  for (int i = 0; i < d; ++i) {
    sines[i] = std::sin(kPi * x[i]);
    cosines[i] = std::cos(kPi * x[i]);
  }
  // prefix/suffix products give prod_{j != i} sin(pi x_j) without divisions
  std::vector<Real> prefix(d + 1, 1.0), suffix(d + 1, 1.0);
  for (int i = 0; i < d; ++i) prefix[i + 1] = prefix[i] * sines[i];
  for (int i = d - 1; i >= 0; --i) suffix[i] = suffix[i + 1] * sines[i];
  const Real s = prefix[d];

  // du*/dt = e^{-t} s (t/r - r)
  // lap u* = e^{-t} [ s ((d-1)/r + t^2/r^3) + (2 pi / r) sum_i x_i cos(pi x_i)
  //          prod_{j != i} sin(pi x_j) - d pi^2 r s ]
  Real cross = 0.0;
  for (int i = 0; i < d; ++i) cross += x[i] * cosines[i] * prefix[i] * suffix[i + 1];
  const Real dt_term = s * (t / r - r);
  const Real lap = s * ((d - 1) / r + t * t / (r * r * r)) + 2.0 * kPi / r * cross -
                   d * kPi * kPi * r * s;
  return std::exp(-t) * (dt_term - lap);
}

SpatialOperator assemble_heat_operator(const AnisoGrid& grid) {
  const int d = grid.dim();
  const Index n = grid.size();
  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(n) * (2 * d + 1));
  for (Index i = 0; i < n; ++i) {
    const auto multi = grid.multi_index(i);
    Real diag = 0.0;
    for (int j = 0; j < d; ++j) {
      const Real w = 1.0 / (grid.mesh_width(j) * grid.mesh_width(j));
      diag += 2.0 * w;
      if (multi[j] > 1) trips.emplace_back(i, i - grid.stride(j), -w);
      if (multi[j] < grid.points_per_dim(j)) trips.emplace_back(i, i + grid.stride(j), -w);
    }
    trips.emplace_back(i, i, diag);
  }
  SparseMat mat(n, n);
  mat.setFromTriplets(trips.begin(), trips.end());
  return SpatialOperator{grid, std::move(mat)};
}

LinearSdeProblem damped_oscillator() {
  const Real omega0 = 1.0;
  const Real xi = 0.05;
  LinearSdeProblem p;
  p.theta.resize(2, 2);
  p.theta << 0.0, 1.0, -omega0 * omega0, -2.0 * xi * omega0;
  p.sigma.resize(2, 1);
  p.sigma << 0.0, 1.0;
  p.noise.resize(1, 1);
  p.noise << 0.1;
  p.mean0 = Eigen::Vector2d(5.0, 5.0);
  p.cov0 = Eigen::Matrix2d::Identity() / 9.0;
  p.box = Box::cube(2, -10.0, 10.0);
  return p;
}

LinearSdeProblem coupled_oscillators() {
  const Real k1 = 1.0, k2 = 1.0, k3 = 1.0;
  const Real c1 = 0.4, c2 = 0.4;
  const Real d1 = 0.2, d2 = 0.2;
  LinearSdeProblem p;
  p.theta.resize(4, 4);
  p.theta << 0.0, 1.0, 0.0, 0.0,                //
      -(k1 + k2), -c1, k2, 0.0,                 //
      0.0, 0.0, 0.0, 1.0,                       //
      k2, 0.0, -(k2 + k3), -c2;
  p.sigma.resize(4, 2);
  p.sigma << 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0;
  p.noise = Eigen::Vector2d(2.0 * d1, 2.0 * d2).asDiagonal();
  p.mean0 = Eigen::Vector4d::Zero();
  p.cov0 = 0.5 * Eigen::Matrix4d::Identity();
  p.box = Box::cube(4, -6.0, 6.0);
  return p;
}

SpatialOperator assemble_fokker_planck_operator(const AnisoGrid& grid,
                                                const LinearSdeProblem& problem) {
  const int d = grid.dim();
  if (problem.dimension() != d)
    throw std::invalid_argument("assemble_fokker_planck_operator: dimension mismatch");
  const Eigen::MatrixXd H = problem.diffusion();
  const Index n = grid.size();
  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(n) * (4 * d + 1));
  for (Index i = 0; i < n; ++i) {
    const auto multi = grid.multi_index(i);
    const auto x = grid.node_coordinate(multi);
    Real diag = 0.0;
    for (int j = 0; j < d; ++j) {
      const Real hj = grid.mesh_width(j);
      const bool lo = multi[j] > 1;
      const bool hi = multi[j] < grid.points_per_dim(j);
      // drift d_j[(theta x)_j u]: the drift coefficient is taken at the tap
      Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(x.data(), d);
      if (hi) {
        y[j] = x[j] + hj;
        trips.emplace_back(i, i + grid.stride(j), problem.theta.row(j).dot(y) / (2.0 * hj));
      }
      if (lo) {
        y[j] = x[j] - hj;
        trips.emplace_back(i, i - grid.stride(j), -problem.theta.row(j).dot(y) / (2.0 * hj));
      }
      // diffusion -1/2 H_jj d2_jj u
      if (H(j, j) != 0.0) {
        const Real w = H(j, j) / (2.0 * hj * hj);
        diag += 2.0 * w;
        if (lo) trips.emplace_back(i, i - grid.stride(j), -w);
        if (hi) trips.emplace_back(i, i + grid.stride(j), -w);
      }
      // mixed pairs enter twice in the double sum, hence the full H_jk
      for (int k = j + 1; k < d; ++k) {
        if (H(j, k) == 0.0) continue;
        const Real c = -H(j, k) / (4.0 * hj * grid.mesh_width(k));
        const bool klo = multi[k] > 1;
        const bool khi = multi[k] < grid.points_per_dim(k);
        if (hi && khi) trips.emplace_back(i, i + grid.stride(j) + grid.stride(k), c);
        if (hi && klo) trips.emplace_back(i, i + grid.stride(j) - grid.stride(k), -c);
        if (lo && khi) trips.emplace_back(i, i - grid.stride(j) + grid.stride(k), -c);
        if (lo && klo) trips.emplace_back(i, i - grid.stride(j) - grid.stride(k), c);
      }
    }
    if (diag != 0.0) trips.emplace_back(i, i, diag);
  }
  SparseMat mat(n, n);
  mat.setFromTriplets(trips.begin(), trips.end());
  return SpatialOperator{grid, std::move(mat)};
}

Real GaussianState::density(const std::vector<Real>& x) const {
  const int d = static_cast<int>(mean.size());
  Eigen::VectorXd delta = Eigen::Map<const Eigen::VectorXd>(x.data(), d) - mean;
  Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("GaussianState: covariance not positive definite");
  const Real quad = delta.dot(llt.solve(delta));
  Real det = 1.0;
  for (int i = 0; i < d; ++i) det *= llt.matrixL()(i, i);
  return std::exp(-0.5 * quad) / (std::pow(2.0 * kPi, 0.5 * d) * det);
}

GaussianState gaussian_solution(const LinearSdeProblem& problem, Real t) {
  if (t < 0.0) throw std::invalid_argument("gaussian_solution: t must be nonnegative");
  const Eigen::MatrixXd H = problem.diffusion();
  GaussianState g;
  g.mean = (problem.theta * t).exp() * problem.mean0;
  Eigen::MatrixXd S = problem.cov0;
  if (t > 0.0) {
    const auto steps = static_cast<Index>(std::ceil(t / 1e-3));
    const Real dt = t / static_cast<Real>(steps);
    const auto rate = [&](const Eigen::MatrixXd& m) -> Eigen::MatrixXd {
      return problem.theta * m + m * problem.theta.transpose() + H;
    };
    for (Index s = 0; s < steps; ++s) {
      const Eigen::MatrixXd k1 = rate(S);
      const Eigen::MatrixXd k2 = rate(S + 0.5 * dt * k1);
      const Eigen::MatrixXd k3 = rate(S + 0.5 * dt * k2);
      const Eigen::MatrixXd k4 = rate(S + dt * k3);
      S += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    S = 0.5 * (S + S.transpose().eval());
  }
  g.covariance = std::move(S);
  return g;
}

Eigen::MatrixXd stationary_covariance(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& H) {
  const Index d = theta.rows();
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(d, d);
  // vec(theta S + S theta^T) = (I x theta + theta x I) vec(S)
  Eigen::MatrixXd lhs =
      Eigen::kroneckerProduct(eye, theta).eval() + Eigen::kroneckerProduct(theta, eye).eval();
  Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(H.data(), d * d);
  Eigen::VectorXd vec = lhs.partialPivLu().solve(rhs);
  Eigen::MatrixXd S = Eigen::Map<const Eigen::MatrixXd>(vec.data(), d, d);
  return 0.5 * (S + S.transpose().eval());
}

CmeProblem toggle_switch_2d() {
  CmeProblem p;
  p.reactions = {
      {{1, 0}, [](const std::vector<Real>& x) { return 3e3 / (1.1e4 + x[1] * x[1]); }},
      {{-1, 0}, [](const std::vector<Real>& x) { return 1e-3 * x[0]; }},
      {{0, 1}, [](const std::vector<Real>& x) { return 3e3 / (1.1e4 + x[0] * x[0]); }},
      {{0, -1}, [](const std::vector<Real>& x) { return 1e-3 * x[1]; }},
  };
  p.mean0 = Eigen::Vector2d(133.0, 133.0);
  p.cov0 = 133.0 * Eigen::Matrix2d::Identity();
  p.box = Box::cube(2, 0.0, 399.0);
  return p;
}

CmeProblem toggle_switch_3d() {
  const auto repressed = [](Real other) { return 3e3 / (1.1e4 + other * other); };
  CmeProblem p;
  p.reactions = {
      {{1, 0, 0}, [=](const std::vector<Real>& x) { return repressed(x[1] + x[2]); }},
      {{-1, 0, 0}, [](const std::vector<Real>& x) { return 1e-3 * x[0]; }},
      {{0, 1, 0}, [=](const std::vector<Real>& x) { return repressed(x[0] + x[2]); }},
      {{0, -1, 0}, [](const std::vector<Real>& x) { return 1e-3 * x[1]; }},
      {{0, 0, 1}, [=](const std::vector<Real>& x) { return repressed(x[0] + x[1]); }},
      {{0, 0, -1}, [](const std::vector<Real>& x) { return 1e-3 * x[2]; }},
  };
  p.mean0 = Eigen::Vector3d(133.0, 133.0, 133.0);
  p.cov0 = 133.0 * Eigen::Matrix3d::Identity();
  p.box = Box::cube(3, 0.0, 199.0);
  return p;
}

SpatialOperator assemble_cme_operator(const AnisoGrid& grid, const CmeProblem& problem) {
  const int d = grid.dim();
  if (problem.dimension() != d)
    throw std::invalid_argument("assemble_cme_operator: dimension mismatch");
  for (const auto& r : problem.reactions)
    if (static_cast<int>(r.stoichiometry.size()) != d)
      throw std::invalid_argument("assemble_cme_operator: stoichiometry dimension mismatch");
  const Index n = grid.size();

  // alpha evaluated at the tap's node; out-of-range taps carry the boundary zero
  const auto alpha_at = [&](const Reaction& r, std::vector<Real> x, int j, Real hj) {
    x[j] += hj;
    const Real a = r.propensity(x);
    if (a < 0.0) throw std::invalid_argument("assemble_cme_operator: negative propensity");
    return a;
  };

  std::vector<Triplet> trips;
  for (Index i = 0; i < n; ++i) {
    const auto multi = grid.multi_index(i);
    const auto x = grid.node_coordinate(multi);
    for (const auto& r : problem.reactions) {
      const auto& nu = r.stoichiometry;
      Real diag = 0.0;
      for (int j = 0; j < d; ++j) {
        if (nu[j] == 0) continue;
        const Real hj = grid.mesh_width(j);
        const bool lo = multi[j] > 1;
        const bool hi = multi[j] < grid.points_per_dim(j);
        // nu_j d_j[alpha u] and -1/2 nu_j^2 d2_jj[alpha u]
        const Real wj = static_cast<Real>(nu[j] * nu[j]) / (2.0 * hj * hj);
        diag += 2.0 * wj * alpha_at(r, x, j, 0.0);
        if (hi)
          trips.emplace_back(i, i + grid.stride(j),
                             alpha_at(r, x, j, hj) * (nu[j] / (2.0 * hj) - wj));
        if (lo)
          trips.emplace_back(i, i - grid.stride(j),
                             alpha_at(r, x, j, -hj) * (-nu[j] / (2.0 * hj) - wj));
        // -nu_j nu_k d2_jk[alpha u] for the unordered pair {j, k}
        for (int k = j + 1; k < d; ++k) {
          if (nu[k] == 0) continue;
          const Real c = -static_cast<Real>(nu[j] * nu[k]) / (4.0 * hj * grid.mesh_width(k));
          const bool klo = multi[k] > 1;
          const bool khi = multi[k] < grid.points_per_dim(k);
          const auto corner = [&](int sj, int sk) {
            std::vector<Real> y = x;
            y[j] += sj * hj;
            y[k] += sk * grid.mesh_width(k);
            const Real a = r.propensity(y);
            if (a < 0.0)
              throw std::invalid_argument("assemble_cme_operator: negative propensity");
            return a;
          };
          if (hi && khi)
            trips.emplace_back(i, i + grid.stride(j) + grid.stride(k), c * corner(1, 1));
          if (hi && klo)
            trips.emplace_back(i, i + grid.stride(j) - grid.stride(k), -c * corner(1, -1));
          if (lo && khi)
            trips.emplace_back(i, i - grid.stride(j) + grid.stride(k), -c * corner(-1, 1));
          if (lo && klo)
            trips.emplace_back(i, i - grid.stride(j) - grid.stride(k), c * corner(-1, -1));
        }
      }
      if (diag != 0.0) trips.emplace_back(i, i, diag);
    }
  }
  SparseMat mat(n, n);
  mat.setFromTriplets(trips.begin(), trips.end());
  return SpatialOperator{grid, std::move(mat)};
}

namespace {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

std::map<std::vector<int>, Real> gillespie_ssa(const CmeProblem& problem,
                                               const std::vector<int>& x0, Real t_end,
                                               int trajectories, std::uint64_t seed) {
  const int d = problem.dimension();
  if (static_cast<int>(x0.size()) != d)
    throw std::invalid_argument("gillespie_ssa: initial state dimension mismatch");
  if (trajectories < 1) throw std::invalid_argument("gillespie_ssa: trajectories must be >= 1");
  if (t_end < 0.0) throw std::invalid_argument("gillespie_ssa: t_end must be nonnegative");
  for (const auto& r : problem.reactions)
    if (static_cast<int>(r.stoichiometry.size()) != d)
      throw std::invalid_argument("gillespie_ssa: stoichiometry dimension mismatch");

  const std::size_t m = problem.reactions.size();
  std::vector<std::vector<int>> finals(trajectories);
  parallel_for(static_cast<std::size_t>(trajectories), [&](std::size_t k) {
    std::mt19937_64 rng(derive_seed(seed, k));
    std::uniform_real_distribution<Real> unit(0.0, 1.0);
    std::vector<int> state = x0;
    std::vector<Real> coords(d), rates(m);
    Real t = 0.0;
    for (;;) {
      for (int j = 0; j < d; ++j) coords[j] = static_cast<Real>(state[j]);
      Real total = 0.0;
      for (std::size_t r = 0; r < m; ++r) {
        rates[r] = problem.reactions[r].propensity(coords);
        if (rates[r] < 0.0)
          throw std::runtime_error("gillespie_ssa: negative propensity at a visited state");
        total += rates[r];
      }
      if (total == 0.0) break;  // absorbed: no reaction can fire
      Real u;
      do {
        u = unit(rng);
      } while (u == 0.0);
      t -= std::log(u) / total;
      if (t > t_end) break;
      Real pick = unit(rng) * total;
      std::size_t r = 0;
      for (; r + 1 < m; ++r) {
        if (pick < rates[r]) break;
        pick -= rates[r];
      }
      for (int j = 0; j < d; ++j) state[j] += problem.reactions[r].stoichiometry[j];
    }
    finals[k] = std::move(state);
  });

  std::map<std::vector<int>, Index> counts;
  for (const auto& state : finals) ++counts[state];
  std::map<std::vector<int>, Real> pmf;
  for (const auto& [state, count] : counts)
    pmf[state] = static_cast<Real>(count) / static_cast<Real>(trajectories);
  return pmf;
}

}  // namespace ctmg
