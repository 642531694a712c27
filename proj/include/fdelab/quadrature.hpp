#pragma once

#include <span>

namespace fdelab {

/// Surface area of the unit sphere in R^n.
[[nodiscard]] double sphere_area(int n);

/// Integral of v(r) r^e over [r.front(), r.back()] on a radial grid.
///
/// Trapezoid rule on v r^e, except that a first cell starting at r = 0 is
/// integrated in closed form with v linear on the cell, so integrable
/// singularities r^e with e > -1 are handled exactly. Every norm in the
/// library goes through this one routine.
[[nodiscard]] double radial_moment(std::span<const double> r, std::span<const double> v, double e);

} // namespace fdelab
