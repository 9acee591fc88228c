#include "dlo/bspline.hpp"

#include <algorithm>

#include "dlo/error.hpp"

namespace dlo {

void BSplineCurve::validate() const {
  if (degree < 1) throw Error(ErrorCode::ContractViolation, "spline degree must be >= 1");
  if (control.size() < static_cast<std::size_t>(degree) + 1) {
    throw Error(ErrorCode::ContractViolation, "too few control points for the degree");
  }
  if (knots.size() != control.size() + static_cast<std::size_t>(degree) + 1) {
    throw Error(ErrorCode::ContractViolation, "knot count must be control count + degree + 1");
  }
  if (!std::is_sorted(knots.begin(), knots.end())) {
    throw Error(ErrorCode::ContractViolation, "knots must be nondecreasing");
  }
  for (int i = 0; i <= degree; ++i) {
    if (knots[static_cast<std::size_t>(i)] != knots.front() ||
        knots[knots.size() - 1 - static_cast<std::size_t>(i)] != knots.back()) {
      throw Error(ErrorCode::ContractViolation, "knot vector is not clamped");
    }
  }
  if (!(knots.back() > knots.front())) {
    throw Error(ErrorCode::ContractViolation, "knot vector has zero length");
  }
}

std::size_t find_span(const BSplineCurve& c, double u) {
  const std::size_t p = static_cast<std::size_t>(c.degree);
  const std::size_t n = c.control.size() - 1;
  if (u >= c.knots[n + 1]) return n;
  if (u <= c.knots[p]) return p;
  // Last k in [p, n] with knots[k] <= u.
  const auto it = std::upper_bound(c.knots.begin() + static_cast<std::ptrdiff_t>(p),
                                   c.knots.begin() + static_cast<std::ptrdiff_t>(n + 1), u);
  return static_cast<std::size_t>(it - c.knots.begin()) - 1;
}

std::vector<double> basis_functions(const std::vector<double>& knots, int degree, std::size_t span,
                                    double u) {
  const std::size_t p = static_cast<std::size_t>(degree);
  std::vector<double> N(p + 1, 0.0), left(p + 1, 0.0), right(p + 1, 0.0);
  N[0] = 1.0;
  for (std::size_t j = 1; j <= p; ++j) {
    left[j] = u - knots[span + 1 - j];
    right[j] = knots[span + j] - u;
    double saved = 0.0;
    for (std::size_t r = 0; r < j; ++r) {
      const double denom = right[r + 1] + left[j - r];
      const double temp = denom == 0.0 ? 0.0 : N[r] / denom;
      N[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    N[j] = saved;
  }
  return N;
}

Vec3 BSplineCurve::evaluate(double u) const {
  u = std::clamp(u, u_min(), u_max());
  const std::size_t span = find_span(*this, u);
  const auto N = basis_functions(knots, degree, span, u);
  Vec3 p = Vec3::Zero();
  const std::size_t deg = static_cast<std::size_t>(degree);
  for (std::size_t i = 0; i <= deg; ++i) p += N[i] * control[span - deg + i];
  return p;
}

Vec3 BSplineCurve::derivative(double u) const {
  // Derivative curve: degree p-1 with control points p (P_{i+1}-P_i)/(t_{i+p+1}-t_{i+1}).
  const std::size_t p = static_cast<std::size_t>(degree);
  if (p == 0) return Vec3::Zero();
  BSplineCurve d;
  d.degree = degree - 1;
  d.knots.assign(knots.begin() + 1, knots.end() - 1);
  for (std::size_t i = 0; i + 1 < control.size(); ++i) {
    const double denom = knots[i + p + 1] - knots[i + 1];
    d.control.push_back(denom == 0.0 ? Vec3::Zero()
                                     : Vec3(static_cast<double>(p) * (control[i + 1] - control[i]) / denom));
  }
  if (d.degree == 0) {
    u = std::clamp(u, d.knots.front(), d.knots.back());
    const auto it = std::upper_bound(d.knots.begin(), d.knots.end() - 1, u);
    std::size_t k = static_cast<std::size_t>(it - d.knots.begin()) - 1;
    k = std::min(k, d.control.size() - 1);
    return d.control[k];
  }
  return d.evaluate(u);
}

BSplineCurve BSplineCurve::clamped_uniform(std::vector<Vec3> control, int degree) {
  const std::size_t n = control.size();
  const std::size_t p = static_cast<std::size_t>(degree);
  if (degree < 1 || n < p + 1) {
    throw Error(ErrorCode::ContractViolation, "clamped spline needs degree+1 control points");
  }
  BSplineCurve c;
  c.degree = degree;
  c.control = std::move(control);
  const std::size_t interior = n - p - 1;
  c.knots.assign(p + 1, 0.0);
  for (std::size_t i = 1; i <= interior; ++i) {
    c.knots.push_back(static_cast<double>(i) / static_cast<double>(interior + 1));
  }
  c.knots.insert(c.knots.end(), p + 1, 1.0);
  return c;
}

}  // namespace dlo
