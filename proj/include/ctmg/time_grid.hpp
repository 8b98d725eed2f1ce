#pragma once

#include "ctmg/types.hpp"

#include <stdexcept>
#include <utility>
#include <vector>

namespace ctmg {

/**
 * Time partition t_0 < ... < t_N with C/F classification by a coarsening factor.
 *
 * Step n covers (t_{n-1}, t_n]. Fine indices divisible by c are C points; with
 * c = 1 the partition carries no classification and is only stepped sequentially.
 * The uniform factory stores one exact step width for every step, so solvers can
 * key factorizations on dt without collecting near-duplicates from differences
 * of rounded times.
 */
class TimePartition {
 public:
  TimePartition(std::vector<Real> times, int c) : times_(std::move(times)), c_(c) {
    if (times_.size() < 2) throw std::invalid_argument("TimePartition: need at least one step");
    if (c_ < 1) throw std::invalid_argument("TimePartition: coarsening factor must be >= 1");
    dts_.resize(times_.size() - 1);
    for (std::size_t n = 0; n + 1 < times_.size(); ++n) {
      dts_[n] = times_[n + 1] - times_[n];
      if (!(dts_[n] > 0.0))
        throw std::invalid_argument("TimePartition: times must be strictly increasing");
    }
    validate_classification();
    uniform_ = true;
    for (Real dt : dts_) uniform_ = uniform_ && (dt == dts_.front());
  }

  static TimePartition uniform(Real t_start, Real t_end, Index steps, int c) {
    if (steps < 1) throw std::invalid_argument("TimePartition: need at least one step");
    if (!(t_end > t_start)) throw std::invalid_argument("TimePartition: empty time interval");
    const Real h = (t_end - t_start) / static_cast<Real>(steps);
    TimePartition p;
    p.c_ = c;
    p.times_.resize(steps + 1);
    for (Index n = 0; n <= steps; ++n) p.times_[n] = t_start + static_cast<Real>(n) * h;
    p.dts_.assign(steps, h);
    p.uniform_ = true;
    if (c < 1) throw std::invalid_argument("TimePartition: coarsening factor must be >= 1");
    p.validate_classification();
    return p;
  }

  Index steps() const { return static_cast<Index>(times_.size()) - 1; }
  int coarsening() const { return c_; }
  Real time(Index n) const { return times_[n]; }
  Real dt(Index n) const { return dts_[n - 1]; }
  bool uniform_dt() const { return uniform_; }

  Index coarse_steps() const { return steps() / c_; }
  Real coarse_time(Index m) const { return times_[m * c_]; }

  // The C points as a partition of their own, classification dropped.
  TimePartition coarsened() const {
    if (uniform_) return uniform(times_.front(), times_.back(), coarse_steps(), 1);
    std::vector<Real> ct(coarse_steps() + 1);
    for (Index m = 0; m < static_cast<Index>(ct.size()); ++m) ct[m] = times_[m * c_];
    return TimePartition(std::move(ct), 1);
  }

 private:
  TimePartition() = default;

  void validate_classification() const {
    if (c_ > 1 && (static_cast<Index>(times_.size()) - 1) % c_ != 0)
      throw std::invalid_argument("TimePartition: step count not divisible by coarsening");
  }

  std::vector<Real> times_;
  std::vector<Real> dts_;
  int c_ = 1;
  bool uniform_ = false;
};

// A contiguous span of fine steps (first, last], both multiples of the coarsening
// factor when used with the multigrid solver.
struct TimeWindow {
  Index first = 0;
  Index last = 0;

  Index steps() const { return last - first; }
};

}  // namespace ctmg
