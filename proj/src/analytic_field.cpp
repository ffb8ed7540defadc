#include "smaxdg/analytic_field.hpp"

#include <memory>
#include <stdexcept>
#include <utility>

namespace smaxdg {

Matrix6x3d fd_jacobian(const AnalyticField& f, const Vector3d& x, double step) {
  Matrix6x3d J;
  for (int d = 0; d < 3; ++d) {
    Vector3d xp = x, xm = x;
    xp[d] += step;
    xm[d] -= step;
    J.col(d) = (f.value(xp) - f.value(xm)) / (2.0 * step);
  }
  return J;
}

namespace {
Vector6d curl_from_jacobian(const Matrix6x3d& J) {
  Vector6d c;
  for (int part = 0; part < 2; ++part) {
    int o = 3 * part;
    c[o + 0] = J(o + 2, 1) - J(o + 1, 2);
    c[o + 1] = J(o + 0, 2) - J(o + 2, 0);
    c[o + 2] = J(o + 1, 0) - J(o + 0, 1);
  }
  return c;
}
}  // namespace

Vector6d fd_curl(const AnalyticField& f, const Vector3d& x, double step) {
  return curl_from_jacobian(fd_jacobian(f, x, step));
}

Eigen::Vector2d fd_div(const AnalyticField& f, const Vector3d& x, double step) {
  Matrix6x3d J = fd_jacobian(f, x, step);
  return {J(0, 0) + J(1, 1) + J(2, 2), J(3, 0) + J(4, 1) + J(5, 2)};
}

Matrix6x3d jacobian_of(const AnalyticField& f, const Vector3d& x, double step) {
  if (f.has_jacobian()) return f.jacobian(x);
  return fd_jacobian(f, x, step);
}

Vector6d curl_of(const AnalyticField& f, const Vector3d& x, double step) {
  if (f.has_curl()) return f.curl(x);
  if (f.has_jacobian()) return curl_from_jacobian(f.jacobian(x));
  return fd_curl(f, x, step);
}

AnalyticField zero_field() { return constant_field(Vector6d::Zero()); }

AnalyticField constant_field(const Vector6d& c) {
  AnalyticField f;
  f.value = [c](const Vector3d&) { return c; };
  f.curl = [](const Vector3d&) { return Vector6d::Zero(); };
  f.div = [](const Vector3d&) { return Eigen::Vector2d::Zero(); };
  f.jacobian = [](const Vector3d&) { return Matrix6x3d::Zero(); };
  return f;
}

AnalyticField combine(std::vector<AnalyticField> fields, std::vector<double> coeffs) {
  if (fields.size() != coeffs.size())
    throw std::invalid_argument("combine: size mismatch");
  bool all_curl = true, all_jac = true, all_div = true;
  for (const auto& f : fields) {
    all_curl = all_curl && f.has_curl();
    all_jac = all_jac && f.has_jacobian();
    all_div = all_div && f.has_div();
  }
  AnalyticField out;
  auto fs = std::make_shared<std::vector<AnalyticField>>(std::move(fields));
  auto cs = std::make_shared<std::vector<double>>(std::move(coeffs));
  out.value = [fs, cs](const Vector3d& x) {
    Vector6d v = Vector6d::Zero();
    for (size_t i = 0; i < fs->size(); ++i) v += (*cs)[i] * (*fs)[i].value(x);
    return v;
  };
  if (all_curl)
    out.curl = [fs, cs](const Vector3d& x) {
      Vector6d v = Vector6d::Zero();
      for (size_t i = 0; i < fs->size(); ++i) v += (*cs)[i] * (*fs)[i].curl(x);
      return v;
    };
  if (all_div)
    out.div = [fs, cs](const Vector3d& x) {
      Eigen::Vector2d v = Eigen::Vector2d::Zero();
      for (size_t i = 0; i < fs->size(); ++i) v += (*cs)[i] * (*fs)[i].div(x);
      return v;
    };
  if (all_jac)
    out.jacobian = [fs, cs](const Vector3d& x) {
      Matrix6x3d v = Matrix6x3d::Zero();
      for (size_t i = 0; i < fs->size(); ++i) v += (*cs)[i] * (*fs)[i].jacobian(x);
      return v;
    };
  return out;
}

}  // namespace smaxdg
