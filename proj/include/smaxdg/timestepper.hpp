#ifndef SMAXDG_TIMESTEPPER_HPP
#define SMAXDG_TIMESTEPPER_HPP

#include <memory>
#include <vector>

#include "smaxdg/maxwell_operator.hpp"
#include "smaxdg/noise.hpp"

namespace smaxdg {

// Implicit midpoint steps on V_h: (A - tau/2 B) u^{n+1} = (A + tau/2 B) u^n - dW_load.
// One factorization per (operator, tau), shared read-only across paths.
// Direct factorization at desk scale, iterative above kIterativeThreshold.
class ImplicitMidpoint {
 public:
  static constexpr int kIterativeThreshold = 20000;

  ImplicitMidpoint(const DiscreteMaxwellOperator& op, double tau);
  ~ImplicitMidpoint();
  ImplicitMidpoint(ImplicitMidpoint&&) noexcept;

  double tau() const { return tau_; }
  const DiscreteMaxwellOperator& op() const { return *op_; }

  // dW_load is the V-load vector of the projected increment (loads * xi).
  Eigen::VectorXd step(const Eigen::VectorXd& u, const Eigen::VectorXd& dW_load) const;
  // T_{h,tau} v and S_{h,tau} v on coefficient vectors.
  Eigen::VectorXd apply_T(const Eigen::VectorXd& v) const;
  Eigen::VectorXd apply_S(const Eigen::VectorXd& v) const;
  // Relative residual of the implicit system for a computed step.
  double step_residual(const Eigen::VectorXd& u0, const Eigen::VectorXd& u1,
                       const Eigen::VectorXd& dW_load) const;

 private:
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

  const DiscreteMaxwellOperator* op_;
  double tau_;
  SparseMatrix A_, lhs_, rhs_;
  struct Solver;
  std::unique_ptr<Solver> solver_;
};

// u_h^0 = pi_h u0 through the whole path grid; returns the N+1 states.
std::vector<Eigen::VectorXd> run_path(const ImplicitMidpoint& stepper,
                                      const ProjectedNoise& noise, const NoisePath& path,
                                      const Eigen::VectorXd& u0_coeffs);

// Final state only (no trajectory storage).
Eigen::VectorXd run_path_final(const ImplicitMidpoint& stepper, const ProjectedNoise& noise,
                               const NoisePath& path, const Eigen::VectorXd& u0_coeffs);

// Semidiscrete mild solution via one dense matrix exponential, increments
// placed at left endpoints of the path grid. Guarded to dim <= 4000.
Eigen::VectorXd expm_reference(const DiscreteMaxwellOperator& op, const ProjectedNoise& noise,
                               const NoisePath& path, const Eigen::VectorXd& u0_coeffs);

// ||u||_V of a coefficient vector.
double coeff_norm_V(const DiscreteMaxwellOperator& op, const Eigen::VectorXd& u);

}  // namespace smaxdg

#endif
