#ifndef SMAXDG_DG_SPACE_HPP
#define SMAXDG_DG_SPACE_HPP

#include <string>

#include "smaxdg/analytic_field.hpp"
#include "smaxdg/mesh.hpp"

namespace smaxdg {

// Piecewise-linear 6-component field over a mesh. Coefficients are nodal P1
// values, laid out as elem*24 + comp*4 + vertex with components
// (E1,E2,E3,H1,H2,H3). Dimension 24 * n_elements.
class DgField {
 public:
  DgField() = default;
  DgField(const Mesh& mesh, Eigen::VectorXd coeffs);
  explicit DgField(const Mesh& mesh);

  const Mesh& mesh() const { return *mesh_; }
  const Eigen::VectorXd& coeffs() const { return c_; }
  Eigen::VectorXd& coeffs() { return c_; }
  int size() const { return static_cast<int>(c_.size()); }

  static int dof(int elem, int comp, int vertex) { return 24 * elem + 4 * comp + vertex; }

  // Value inside element `elem` only; fields are discontinuous across faces.
  Vector6d eval(int elem, const Vector3d& x) const;
  // Nodal value of all 6 components at a local vertex of an element.
  Vector6d nodal(int elem, int vertex) const;

 private:
  const Mesh* mesh_ = nullptr;
  Eigen::VectorXd c_;
};

// Block-diagonal weighted P1 Gram structure: per element, 4x4 blocks scaled
// by eps (E components) and mu (H components).
struct MassStructure {
  const Mesh* mesh = nullptr;
  // Reference 4x4 P1 Gram on a unit-volume tet is (I + ones)/20.
  static Eigen::Matrix4d reference_gram();
  static Eigen::Matrix4d reference_gram_inverse();

  Eigen::VectorXd apply(const Eigen::VectorXd& u) const;
  Eigen::VectorXd solve(const Eigen::VectorXd& r) const;
  SparseMatrix matrix() const;
};

MassStructure mass_structure(const Mesh& mesh);

// <u, v>_V = sum_K int eps E_u.E_v + mu H_u.H_v; exact for P1 pairs.
double inner_product_V(const DgField& u, const DgField& v);
double norm_V(const DgField& u);

// Element-local L2 projection (the weighted projection coincides with it for
// piecewise-constant media). quad_degree controls the load quadrature.
DgField project(const AnalyticField& f, const Mesh& mesh, int quad_degree = 6);

// Load vector b_j = <f, phi_j>_V, so project = mass.solve(load).
Eigen::VectorXd load_vector(const AnalyticField& f, const Mesh& mesh, int quad_degree = 6);

// V-norm of (u_h - f). The quadrature degree must resolve f; the default
// handles the low cavity modes used by the experiments.
double error_norm_V(const DgField& u, const AnalyticField& f, int quad_degree = 12);
double norm_V_analytic(const AnalyticField& f, const Mesh& mesh, int quad_degree = 12);

// P1 function on the triangle of an interior face: nodal values of
// v_{K_F} - v_K at the three face vertices.
struct FaceJump {
  Eigen::Matrix<double, 6, 3> nodal;
  Vector6d eval(const Eigen::Vector3d& bary) const { return nodal * bary; }
};
FaceJump face_jump(const DgField& u, int face_id);

// Broken H^k seminorm (k = 1 or 2) of an analytic field; k=2 uses the
// Frobenius norm of the Hessian per component. Finite-difference fallback
// with step fd_rel * h when derivative callables are missing.
double broken_seminorm(const AnalyticField& f, const Mesh& mesh, int k,
                       int quad_degree = 6, double fd_rel = 1e-5);

// Sum over all faces of the squared L2 face norm of (f - pi_h f).
double face_projection_error_sq(const DgField& pf, const AnalyticField& f,
                                int quad_degree = 8);

void write_vtk(const DgField& u, const std::string& path);

}  // namespace smaxdg

#endif
