#ifndef SMAXDG_MESH_HPP
#define SMAXDG_MESH_HPP

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "smaxdg/types.hpp"

namespace smaxdg {

// Axis-aligned box (a1-,a1+) x (a2-,a2+) x (a3-,a3+).
struct Cuboid {
  Vector3d lo{0, 0, 0};
  Vector3d hi{1, 1, 1};

  double volume() const { return (hi - lo).prod(); }
  Vector3d extent() const { return hi - lo; }
  bool on_boundary(const Vector3d& x, double tol) const;
};

inline Cuboid unit_cube() { return Cuboid{}; }
inline Cuboid pi_cube() { return Cuboid{Vector3d::Zero(), Vector3d::Constant(M_PI)}; }

struct MediumBlock {
  Cuboid box;
  double eps = 1.0;
  double mu = 1.0;
};

// Piecewise-constant isotropic medium: either global constants or
// axis-aligned blocks whose boundaries must lie on grid planes.
class MediumSpec {
 public:
  static MediumSpec constant(double eps, double mu);
  static MediumSpec blocks(std::vector<MediumBlock> blocks, double delta);

  bool is_constant() const { return blocks_.empty(); }
  double constant_eps() const { return eps_; }
  double constant_mu() const { return mu_; }
  double delta() const { return delta_; }
  const std::vector<MediumBlock>& block_list() const { return blocks_; }

  // (eps, mu) of the block containing the point (element centroid).
  std::pair<double, double> at(const Vector3d& x) const;

 private:
  double eps_ = 1.0, mu_ = 1.0, delta_ = 1.0;
  std::vector<MediumBlock> blocks_;
};

struct Element {
  std::array<int, 4> v;
  double volume = 0;
  Vector3d centroid = Vector3d::Zero();
  // lambda_i(x) = bary(i,0..2) . x + bary(i,3); rows are the barycentric
  // coordinate functions, so grad lambda_i = bary.row(i).head<3>().
  Eigen::Matrix<double, 4, 4> bary;
  std::array<int, 4> face_ids{-1, -1, -1, -1};

  Vector3d grad_lambda(int i) const { return bary.row(i).head<3>().transpose(); }
  Eigen::Vector4d lambda(const Vector3d& x) const {
    return bary * (Eigen::Vector4d() << x, 1.0).finished();
  }
};

struct Face {
  std::array<int, 3> v;
  double area = 0;
  Vector3d normal = Vector3d::Zero();  // unit; owner -> neighbor, outward on the boundary
  int owner = -1;
  int neighbor = -1;  // -1 for boundary faces
  std::array<int, 3> owner_local{};     // local vertex index in owner of v[i]
  std::array<int, 3> neighbor_local{};  // same for the neighbor
};

struct Mesh {
  Cuboid domain;
  std::array<int, 3> subdivisions{1, 1, 1};
  std::vector<Vector3d> vertices;
  std::vector<Element> elements;
  std::vector<Face> faces;
  std::vector<int> interior_faces;
  std::vector<int> exterior_faces;
  std::vector<double> eps;  // per element
  std::vector<double> mu;
  double h = 0;  // max element diameter

  int n_elements() const { return static_cast<int>(elements.size()); }
  int n_faces() const { return static_cast<int>(faces.size()); }
  Vector3d point(int elem, const Eigen::Vector4d& bary) const;
  // Element containing x (structured lookup); -1 if outside.
  int locate(const Vector3d& x) const;
};

// Kuhn 6-tetrahedra split of a uniform n1 x n2 x n3 grid. Deterministic:
// identical inputs give bitwise-identical meshes.
Mesh build_structured_mesh(const Cuboid& domain, const std::array<int, 3>& n,
                           const MediumSpec& medium);

// Disjoint (interior, exterior) partition of face ids; revalidates adjacency.
std::pair<std::vector<int>, std::vector<int>> classify_faces(const Mesh& mesh);

// Legacy ASCII VTK export (cell type 10) for visual inspection.
void write_vtk(const Mesh& mesh, const std::string& path);

}  // namespace smaxdg

#endif
