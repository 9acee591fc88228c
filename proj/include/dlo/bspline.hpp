#pragma once

#include <vector>

#include "dlo/geom.hpp"

namespace dlo {

/// Clamped B-spline curve in 3-d: knots.size() == control.size() + degree + 1
/// and the first/last degree+1 knots are equal.
struct BSplineCurve {
  int degree = 3;
  std::vector<double> knots;
  std::vector<Vec3> control;

  double u_min() const { return knots[static_cast<std::size_t>(degree)]; }
  double u_max() const { return knots[knots.size() - 1 - static_cast<std::size_t>(degree)]; }

  /// Throws ContractViolation when the knot vector is inconsistent.
  void validate() const;

  Vec3 evaluate(double u) const;
  Vec3 derivative(double u) const;

  /// Clamped spline with uniformly spaced interior knots on [0, 1].
  static BSplineCurve clamped_uniform(std::vector<Vec3> control, int degree);
};

/// Knot span index k with knots[k] <= u < knots[k+1] (last span for u_max).
std::size_t find_span(const BSplineCurve& c, double u);

/// Nonzero basis functions N_{span-p..span, p}(u).
std::vector<double> basis_functions(const std::vector<double>& knots, int degree, std::size_t span,
                                    double u);

}  // namespace dlo
