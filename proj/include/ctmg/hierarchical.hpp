#pragma once

#include "ctmg/grid.hpp"
#include "ctmg/types.hpp"

namespace ctmg {

/**
 * In-place transform between nodal values and hierarchical surpluses.
 *
 * The d-dimensional transform is the composition of d one-dimensional passes, one per
 * dimension, each sweeping every grid line along that dimension. A 1D pass walks the
 * dyadic levels from finest to coarsest and subtracts the mean of the two hierarchical
 * parents (boundary parents contribute zero), so the pair of passes below are exact
 * inverses up to roundoff.
 */
void hierarchize(const AnisoGrid& grid, Vector& values);
void dehierarchize(const AnisoGrid& grid, Vector& values);

}  // namespace ctmg
