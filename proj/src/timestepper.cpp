#include "smaxdg/timestepper.hpp"

#include <stdexcept>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>
#include <unsupported/Eigen/MatrixFunctions>

namespace smaxdg {

struct ImplicitMidpoint::Solver {
  bool direct = true;
  Eigen::SparseLU<SparseMatrix> lu;
  Eigen::BiCGSTAB<SparseMatrix, Eigen::IncompleteLUT<double>> krylov;
};

ImplicitMidpoint::ImplicitMidpoint(const DiscreteMaxwellOperator& op, double tau)
    : op_(&op), tau_(tau) {
  if (tau <= 0) throw std::invalid_argument("ImplicitMidpoint: tau must be positive");
  A_ = op.mass().matrix();
  lhs_ = A_ - 0.5 * tau * op.form();
  rhs_ = A_ + 0.5 * tau * op.form();
  solver_ = std::make_unique<Solver>();
  solver_->direct = op.dim() <= kIterativeThreshold;
  if (solver_->direct) {
    solver_->lu.compute(lhs_);
    if (solver_->lu.info() != Eigen::Success)
      throw std::runtime_error("ImplicitMidpoint: singular system (assembly bug)");
  } else {
    solver_->krylov.setTolerance(1e-13);
    solver_->krylov.setMaxIterations(5000);
    solver_->krylov.compute(lhs_);
    if (solver_->krylov.info() != Eigen::Success)
      throw std::runtime_error("ImplicitMidpoint: iterative setup failed");
  }
}

ImplicitMidpoint::~ImplicitMidpoint() = default;
ImplicitMidpoint::ImplicitMidpoint(ImplicitMidpoint&&) noexcept = default;

Eigen::VectorXd ImplicitMidpoint::solve(const Eigen::VectorXd& rhs) const {
  if (solver_->direct) return solver_->lu.solve(rhs);
  Eigen::VectorXd x = solver_->krylov.solve(rhs);
  if (solver_->krylov.info() != Eigen::Success)
    throw std::runtime_error("ImplicitMidpoint: iterative solve did not converge");
  return x;
}

Eigen::VectorXd ImplicitMidpoint::step(const Eigen::VectorXd& u,
                                       const Eigen::VectorXd& dW_load) const {
  return solve(rhs_ * u - dW_load);
}

Eigen::VectorXd ImplicitMidpoint::apply_T(const Eigen::VectorXd& v) const {
  return solve(A_ * v);
}

Eigen::VectorXd ImplicitMidpoint::apply_S(const Eigen::VectorXd& v) const {
  return solve(rhs_ * v);
}

double ImplicitMidpoint::step_residual(const Eigen::VectorXd& u0, const Eigen::VectorXd& u1,
                                       const Eigen::VectorXd& dW_load) const {
  Eigen::VectorXd r = lhs_ * u1 - (rhs_ * u0 - dW_load);
  double scale = (lhs_ * u1).norm() + (rhs_ * u0).norm() + dW_load.norm();
  return scale > 0 ? r.norm() / scale : r.norm();
}

std::vector<Eigen::VectorXd> run_path(const ImplicitMidpoint& stepper,
                                      const ProjectedNoise& noise, const NoisePath& path,
                                      const Eigen::VectorXd& u0_coeffs) {
  std::vector<Eigen::VectorXd> traj;
  traj.reserve(path.steps + 1);
  traj.push_back(u0_coeffs);
  for (std::int64_t n = 0; n < path.steps; ++n) {
    Eigen::VectorXd load = noise.loads * path.increments_at(n);
    traj.push_back(stepper.step(traj.back(), load));
  }
  return traj;
}

Eigen::VectorXd run_path_final(const ImplicitMidpoint& stepper, const ProjectedNoise& noise,
                               const NoisePath& path, const Eigen::VectorXd& u0_coeffs) {
  Eigen::VectorXd u = u0_coeffs;
  for (std::int64_t n = 0; n < path.steps; ++n) {
    Eigen::VectorXd load = noise.loads * path.increments_at(n);
    u = stepper.step(u, load);
  }
  return u;
}

Eigen::VectorXd expm_reference(const DiscreteMaxwellOperator& op, const ProjectedNoise& noise,
                               const NoisePath& path, const Eigen::VectorXd& u0_coeffs) {
  const int dim = op.dim();
  if (dim > 4000) throw std::invalid_argument("expm_reference: dimension guard exceeded");
  if (path.steps == 0) return u0_coeffs;

  // Dense A^{-1} B, one exponential of tau * that, then the left-endpoint recursion.
  Eigen::MatrixXd Mtilde(dim, dim);
  Eigen::MatrixXd Bd = Eigen::MatrixXd(op.form());
  for (int c = 0; c < dim; ++c) Mtilde.col(c) = op.mass().solve(Bd.col(c));
  Eigen::MatrixXd F = (path.dt() * Mtilde).exp();

  Eigen::VectorXd v = u0_coeffs;
  for (std::int64_t n = 0; n < path.steps; ++n) {
    Eigen::VectorXd dWc = op.mass().solve(noise.loads * path.increments_at(n));
    v = F * (v - dWc);
  }
  return v;
}

double coeff_norm_V(const DiscreteMaxwellOperator& op, const Eigen::VectorXd& u) {
  return std::sqrt(std::max(0.0, u.dot(op.mass().apply(u))));
}

}  // namespace smaxdg
