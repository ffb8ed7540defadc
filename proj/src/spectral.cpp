#include "smaxdg/spectral.hpp"

#include <cmath>
#include <stdexcept>

#include "smaxdg/noise.hpp"

namespace smaxdg {

CavityMode tm_mode(const Cuboid& domain, int m, int n) {
  const double tol = 1e-12;
  if ((domain.lo - Vector3d::Zero()).norm() > tol ||
      (domain.hi - Vector3d::Constant(M_PI)).norm() > tol)
    throw std::invalid_argument("tm_mode: cavity modes are built for the cube (0,pi)^3");
  if (m < 1 || n < 1) throw std::invalid_argument("tm_mode: indices must be >= 1");

  CavityMode mode;
  mode.m = m;
  mode.n = n;
  const double omega = std::sqrt(double(m) * m + double(n) * n);
  mode.omega = omega;
  // ||sin(m x1) sin(n x2)||^2 over (0,pi)^3 is pi^3/4 for both members.
  const double c = 2.0 / std::pow(M_PI, 1.5);
  mode.amplitude = c;

  const double dm = m, dn = n;

  mode.u1.value = [c, dm, dn](const Vector3d& x) {
    Vector6d v = Vector6d::Zero();
    v[2] = c * std::sin(dm * x[0]) * std::sin(dn * x[1]);
    return v;
  };
  mode.u1.curl = [c, dm, dn](const Vector3d& x) {
    Vector6d v = Vector6d::Zero();
    v[0] = c * dn * std::sin(dm * x[0]) * std::cos(dn * x[1]);
    v[1] = -c * dm * std::cos(dm * x[0]) * std::sin(dn * x[1]);
    return v;
  };
  mode.u1.div = [](const Vector3d&) { return Eigen::Vector2d::Zero(); };
  mode.u1.jacobian = [c, dm, dn](const Vector3d& x) {
    Matrix6x3d J = Matrix6x3d::Zero();
    J(2, 0) = c * dm * std::cos(dm * x[0]) * std::sin(dn * x[1]);
    J(2, 1) = c * dn * std::sin(dm * x[0]) * std::cos(dn * x[1]);
    return J;
  };

  const double s = c / omega;
  mode.u2.value = [s, dm, dn](const Vector3d& x) {
    Vector6d v = Vector6d::Zero();
    v[3] = s * dn * std::sin(dm * x[0]) * std::cos(dn * x[1]);
    v[4] = -s * dm * std::cos(dm * x[0]) * std::sin(dn * x[1]);
    return v;
  };
  mode.u2.curl = [s, dm, dn](const Vector3d& x) {
    Vector6d v = Vector6d::Zero();
    // curl H = omega E / c * s = (m^2 + n^2)/omega * (E pattern)
    v[5] = s * (dm * dm + dn * dn) * std::sin(dm * x[0]) * std::sin(dn * x[1]);
    return v;
  };
  mode.u2.div = [](const Vector3d&) { return Eigen::Vector2d::Zero(); };
  mode.u2.jacobian = [s, dm, dn](const Vector3d& x) {
    Matrix6x3d J = Matrix6x3d::Zero();
    J(3, 0) = s * dn * dm * std::cos(dm * x[0]) * std::cos(dn * x[1]);
    J(3, 1) = -s * dn * dn * std::sin(dm * x[0]) * std::sin(dn * x[1]);
    J(4, 0) = s * dm * dm * std::sin(dm * x[0]) * std::sin(dn * x[1]);
    J(4, 1) = -s * dm * dn * std::cos(dm * x[0]) * std::cos(dn * x[1]);
    return J;
  };

  return mode;
}

Eigen::Matrix2d rotation(double angle) {
  Eigen::Matrix2d R;
  const double cs = std::cos(angle), sn = std::sin(angle);
  R << cs, sn, -sn, cs;
  return R;
}

Eigen::Matrix2d midpoint_S(double tau, double omega) {
  const double c = 0.5 * tau * omega;
  const double d = 1.0 + c * c;
  Eigen::Matrix2d S;
  S << (1.0 - c * c) / d, 2.0 * c / d, -2.0 * c / d, (1.0 - c * c) / d;
  return S;
}

Eigen::Matrix2d midpoint_T(double tau, double omega) {
  const double c = 0.5 * tau * omega;
  const double d = 1.0 + c * c;
  Eigen::Matrix2d T;
  T << 1.0 / d, c / d, -c / d, 1.0 / d;
  return T;
}

double midpoint_angle(double tau, double omega) { return 2.0 * std::atan(0.5 * tau * omega); }

namespace {
void check_alignment(const SpectralField& u, const std::vector<double>& omegas,
                     const NoisePath& path) {
  if (u.blocks() != static_cast<int>(omegas.size()))
    throw std::invalid_argument("spectral flow: omega list does not match field blocks");
  if (path.n_modes() != 2 * u.blocks())
    throw std::invalid_argument("spectral flow: path modes misaligned with blocks");
}
}  // namespace

SpectralField exact_flow_partial(const SpectralField& u0, const std::vector<double>& omegas,
                                 const NoisePath& path, std::int64_t n) {
  check_alignment(u0, omegas, path);
  const double tau = path.dt();
  const double t = tau * static_cast<double>(n);
  SpectralField out(u0.blocks());
  for (int j = 0; j < u0.blocks(); ++j) {
    Eigen::Vector2d acc = rotation(omegas[j] * t) * Eigen::Vector2d(u0.a[j], u0.b[j]);
    for (std::int64_t i = 0; i < n; ++i) {
      Eigen::Vector2d dW(path.increment(2 * j, i), path.increment(2 * j + 1, i));
      acc -= rotation(omegas[j] * (t - tau * static_cast<double>(i))) * dW;
    }
    out.a[j] = acc[0];
    out.b[j] = acc[1];
  }
  return out;
}

SpectralField exact_flow(const SpectralField& u0, const std::vector<double>& omegas,
                         const NoisePath& path) {
  return exact_flow_partial(u0, omegas, path, path.steps);
}

SpectralField midpoint_flow(const SpectralField& u0, const std::vector<double>& omegas,
                            const NoisePath& path) {
  check_alignment(u0, omegas, path);
  const double tau = path.dt();
  SpectralField out(u0.blocks());
  for (int j = 0; j < u0.blocks(); ++j) {
    const Eigen::Matrix2d S = midpoint_S(tau, omegas[j]);
    const Eigen::Matrix2d T = midpoint_T(tau, omegas[j]);
    Eigen::Vector2d u(u0.a[j], u0.b[j]);
    for (std::int64_t i = 0; i < path.steps; ++i) {
      Eigen::Vector2d dW(path.increment(2 * j, i), path.increment(2 * j + 1, i));
      u = S * u - T * dW;
    }
    out.a[j] = u[0];
    out.b[j] = u[1];
  }
  return out;
}

SpectralField midpoint_spectral_step(const SpectralField& u,
                                     const std::vector<double>& omegas, double tau,
                                     const Eigen::Matrix2Xd& increments) {
  if (u.blocks() != increments.cols() || u.blocks() != static_cast<int>(omegas.size()))
    throw std::invalid_argument("midpoint_spectral_step: block mismatch");
  SpectralField out(u.blocks());
  for (int j = 0; j < u.blocks(); ++j) {
    Eigen::Vector2d v = midpoint_S(tau, omegas[j]) * Eigen::Vector2d(u.a[j], u.b[j]) -
                        midpoint_T(tau, omegas[j]) * increments.col(j);
    out.a[j] = v[0];
    out.b[j] = v[1];
  }
  return out;
}

double semigroup_error(const SpectralField& v, const std::vector<double>& omegas,
                       double tau, std::int64_t n) {
  double s = 0;
  for (int j = 0; j < v.blocks(); ++j) {
    const double gap =
        omegas[j] * tau * static_cast<double>(n) - static_cast<double>(n) * midpoint_angle(tau, omegas[j]);
    const double factor = 2.0 * std::sin(0.5 * gap);
    s += factor * factor * (v.a[j] * v.a[j] + v.b[j] * v.b[j]);
  }
  return std::sqrt(s);
}

AnalyticField spectral_to_field(const SpectralField& u, const std::vector<CavityMode>& modes) {
  if (u.blocks() != static_cast<int>(modes.size()))
    throw std::invalid_argument("spectral_to_field: block mismatch");
  std::vector<AnalyticField> fields;
  std::vector<double> coeffs;
  for (int j = 0; j < u.blocks(); ++j) {
    fields.push_back(modes[j].u1);
    coeffs.push_back(u.a[j]);
    fields.push_back(modes[j].u2);
    coeffs.push_back(u.b[j]);
  }
  return combine(std::move(fields), std::move(coeffs));
}

}  // namespace smaxdg
