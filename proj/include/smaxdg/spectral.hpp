#ifndef SMAXDG_SPECTRAL_HPP
#define SMAXDG_SPECTRAL_HPP

#include <vector>

#include "smaxdg/analytic_field.hpp"
#include "smaxdg/mesh.hpp"

namespace smaxdg {

// Analytic TM-type cavity eigenpair of the unit-medium Maxwell operator on
// the cube (0,pi)^3. The pair (u1, u2) spans a 2x2 invariant block on which
// the operator acts as [[0, omega], [-omega, 0]]:
//   M u1 = -omega u2,  M u2 = omega u1.
// Both members have unit V-norm; fields are divergence free and satisfy
// n x E = 0, n . H = 0 on the boundary.
struct CavityMode {
  int m = 1, n = 1;
  double omega = 0;
  double amplitude = 0;  // normalization constant
  AnalyticField u1;      // (E, 0)
  AnalyticField u2;      // (0, H)
};

CavityMode tm_mode(const Cuboid& domain, int m, int n);

// Coefficients over cavity-mode blocks: u = sum_j a_j u1_j + b_j u2_j.
struct SpectralField {
  Eigen::VectorXd a, b;

  SpectralField() = default;
  explicit SpectralField(int blocks)
      : a(Eigen::VectorXd::Zero(blocks)), b(Eigen::VectorXd::Zero(blocks)) {}
  int blocks() const { return static_cast<int>(a.size()); }
  double norm() const { return std::sqrt(a.squaredNorm() + b.squaredNorm()); }
};

// Block rotation convention: exp(t M) restricted to a block is rotation(omega t)
// acting on (a, b) with rotation(t) = [[cos, sin], [-sin, cos]].
Eigen::Matrix2d rotation(double angle);

// Cayley one-step maps, c = tau*omega/2:
//   S_tau = ((1 - c^2) I + 2 c J) / (1 + c^2)   (a rotation by 2 atan c)
//   T_tau = (I + c J) / (1 + c^2)
Eigen::Matrix2d midpoint_S(double tau, double omega);
Eigen::Matrix2d midpoint_T(double tau, double omega);
double midpoint_angle(double tau, double omega);  // 2 atan(tau omega / 2)

class NoisePath;  // noise.hpp; path modes 2j, 2j+1 feed block j

// Mild solution at t = path.T with the stochastic convolution accumulated by
// exact rotations applied at left endpoints of the path grid.
SpectralField exact_flow(const SpectralField& u0, const std::vector<double>& omegas,
                         const NoisePath& path);

// Midpoint recursion over the whole path grid (equals its mild form exactly).
SpectralField midpoint_flow(const SpectralField& u0, const std::vector<double>& omegas,
                            const NoisePath& path);

// One midpoint step with per-block increments (column j = block j).
SpectralField midpoint_spectral_step(const SpectralField& u,
                                     const std::vector<double>& omegas, double tau,
                                     const Eigen::Matrix2Xd& increments);

// || (S(n tau) - S_tau^n) v ||_V in closed form via rotation angle gaps.
double semigroup_error(const SpectralField& v, const std::vector<double>& omegas,
                       double tau, std::int64_t n);

// Partial exact flow: state at grid index n of the path (t = n dt).
SpectralField exact_flow_partial(const SpectralField& u0, const std::vector<double>& omegas,
                                 const NoisePath& path, std::int64_t n);

// The analytic field carried by spectral coefficients.
AnalyticField spectral_to_field(const SpectralField& u, const std::vector<CavityMode>& modes);

}  // namespace smaxdg

#endif
