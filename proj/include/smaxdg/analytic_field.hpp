#ifndef SMAXDG_ANALYTIC_FIELD_HPP
#define SMAXDG_ANALYTIC_FIELD_HPP

#include <functional>
#include <vector>

#include "smaxdg/types.hpp"

namespace smaxdg {

// Closed-form (E, H) field on the domain. value is mandatory; curl (of E and
// of H), divergence and Jacobian callables are optional with central
// finite-difference fallbacks.
struct AnalyticField {
  std::function<Vector6d(const Vector3d&)> value;
  std::function<Vector6d(const Vector3d&)> curl;            // (curl E, curl H)
  std::function<Eigen::Vector2d(const Vector3d&)> div;      // (div E, div H)
  std::function<Matrix6x3d(const Vector3d&)> jacobian;      // d(comp)/dx_j

  bool has_curl() const { return static_cast<bool>(curl); }
  bool has_div() const { return static_cast<bool>(div); }
  bool has_jacobian() const { return static_cast<bool>(jacobian); }
};

// Central differences with the given step.
Matrix6x3d fd_jacobian(const AnalyticField& f, const Vector3d& x, double step);
Vector6d fd_curl(const AnalyticField& f, const Vector3d& x, double step);
Eigen::Vector2d fd_div(const AnalyticField& f, const Vector3d& x, double step);

Matrix6x3d jacobian_of(const AnalyticField& f, const Vector3d& x, double step);
Vector6d curl_of(const AnalyticField& f, const Vector3d& x, double step);

AnalyticField zero_field();
AnalyticField constant_field(const Vector6d& c);
// Sum of coeff[i] * fields[i]; propagates curls when all terms have them.
AnalyticField combine(std::vector<AnalyticField> fields, std::vector<double> coeffs);

}  // namespace smaxdg

#endif
