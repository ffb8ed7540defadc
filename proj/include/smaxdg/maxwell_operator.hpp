#ifndef SMAXDG_MAXWELL_OPERATOR_HPP
#define SMAXDG_MAXWELL_OPERATOR_HPP

#include <string>

#include "smaxdg/dg_space.hpp"
#include "smaxdg/mesh.hpp"

namespace smaxdg {

// Upwind flux coefficients of one face. alpha/beta pair across the face and
// sum to one; gamma/delta are the jump penalties.
struct FluxCoefficients {
  double alpha_K, alpha_KF;
  double beta_K, beta_KF;
  double gamma_F, delta_F;
};

// C_K = (eps_K mu_K)^{-1/2}; alpha_K = C_KF eps_KF / (C_KF eps_KF + C_K eps_K),
// beta analogous with mu, gamma_F = 1/(C_KF mu_KF + C_K mu_K),
// delta_F = 1/(C_KF eps_KF + C_K eps_K).
FluxCoefficients flux_coefficients(double eps_K, double mu_K, double eps_KF, double mu_KF);

// Boundary faces mirror the inside medium (eps_KF = eps_K, mu_KF = mu_K).
FluxCoefficients exterior_flux_coefficients(double eps_K, double mu_K);

// Sparse assembly of the discrete Maxwell operator in the mass-weighted
// sense: mass() is A, form() is B with B(j,l) = <M_h phi_l, phi_j>_V, and
// applying M_h is mass.solve(B u). Volume (curl) and face (flux/penalty)
// parts are kept separately.
class DiscreteMaxwellOperator {
 public:
  DiscreteMaxwellOperator(const Mesh& mesh, SparseMatrix vol, SparseMatrix face);

  const Mesh& mesh() const { return *mesh_; }
  const SparseMatrix& form() const { return form_; }
  const SparseMatrix& volume_part() const { return vol_; }
  const SparseMatrix& face_part() const { return face_; }
  const MassStructure& mass() const { return mass_; }
  int dim() const { return static_cast<int>(form_.rows()); }

  // Coefficients of M_h u_h.
  Eigen::VectorXd apply(const Eigen::VectorXd& u) const;
  // <M_h u_h, v_h>_V.
  double bilinear(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;

 private:
  const Mesh* mesh_;
  SparseMatrix vol_, face_, form_;
  MassStructure mass_;
};

DiscreteMaxwellOperator assemble(const Mesh& mesh);

// Explicit face sum of the dissipation identity:
// sum_int gamma_F |n x [[E]]|^2 + delta_F |n x [[H]]|^2 + 2 sum_ext gamma_F |n x E|^2,
// so that <M_h u, u>_V == -face_dissipation(u).
double face_dissipation(const DgField& u);

// Integration-by-parts form of the operator; equals bilinear() for dG fields.
double mixed_form(const DgField& u, const DgField& v);
// Same for a continuous field u in D(M) intersect H^1 (jump terms vanish).
double mixed_form(const AnalyticField& u, const DgField& v, int quad_degree = 8);

// Load r_j = <M_h u, phi_j>_V for continuous u (needs curls); the
// coefficients of M_h u are mass.solve of this.
Eigen::VectorXd definition_load(const AnalyticField& u, const Mesh& mesh,
                                int quad_degree = 8);

void write_matrix_market(const SparseMatrix& A, const std::string& path);

}  // namespace smaxdg

#endif
