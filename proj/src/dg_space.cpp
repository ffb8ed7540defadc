#include "smaxdg/dg_space.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "smaxdg/quadrature.hpp"

namespace smaxdg {

DgField::DgField(const Mesh& mesh, Eigen::VectorXd coeffs)
    : mesh_(&mesh), c_(std::move(coeffs)) {
  if (c_.size() != 24 * mesh.n_elements())
    throw std::invalid_argument("DgField: coefficient size does not match the mesh");
}

DgField::DgField(const Mesh& mesh)
    : mesh_(&mesh), c_(Eigen::VectorXd::Zero(24 * mesh.n_elements())) {}

Vector6d DgField::eval(int elem, const Vector3d& x) const {
  Eigen::Vector4d lam = mesh_->elements[elem].lambda(x);
  Vector6d out;
  for (int c = 0; c < 6; ++c)
    out[c] = c_.segment<4>(24 * elem + 4 * c).dot(lam);
  return out;
}

Vector6d DgField::nodal(int elem, int vertex) const {
  Vector6d out;
  for (int c = 0; c < 6; ++c) out[c] = c_[dof(elem, c, vertex)];
  return out;
}

Eigen::Matrix4d MassStructure::reference_gram() {
  return (Eigen::Matrix4d::Identity() + Eigen::Matrix4d::Ones()) / 20.0;
}

Eigen::Matrix4d MassStructure::reference_gram_inverse() {
  return 20.0 * (Eigen::Matrix4d::Identity() - Eigen::Matrix4d::Ones() / 5.0);
}

namespace {
inline double weight_of(const Mesh& mesh, int elem, int comp) {
  return comp < 3 ? mesh.eps[elem] : mesh.mu[elem];
}
}  // namespace

Eigen::VectorXd MassStructure::apply(const Eigen::VectorXd& u) const {
  const Eigen::Matrix4d G = reference_gram();
  Eigen::VectorXd r(u.size());
  for (int e = 0; e < mesh->n_elements(); ++e) {
    double V = mesh->elements[e].volume;
    for (int c = 0; c < 6; ++c) {
      double w = weight_of(*mesh, e, c) * V;
      r.segment<4>(24 * e + 4 * c) = w * (G * u.segment<4>(24 * e + 4 * c));
    }
  }
  return r;
}

Eigen::VectorXd MassStructure::solve(const Eigen::VectorXd& r) const {
  const Eigen::Matrix4d Gi = reference_gram_inverse();
  Eigen::VectorXd u(r.size());
  for (int e = 0; e < mesh->n_elements(); ++e) {
    double V = mesh->elements[e].volume;
    for (int c = 0; c < 6; ++c) {
      double w = weight_of(*mesh, e, c) * V;
      u.segment<4>(24 * e + 4 * c) = (Gi * r.segment<4>(24 * e + 4 * c)) / w;
    }
  }
  return u;
}

SparseMatrix MassStructure::matrix() const {
  const Eigen::Matrix4d G = reference_gram();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(16 * 6 * mesh->n_elements());
  for (int e = 0; e < mesh->n_elements(); ++e) {
    double V = mesh->elements[e].volume;
    for (int c = 0; c < 6; ++c) {
      double w = weight_of(*mesh, e, c) * V;
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
          trips.emplace_back(DgField::dof(e, c, i), DgField::dof(e, c, j), w * G(i, j));
    }
  }
  SparseMatrix A(24 * mesh->n_elements(), 24 * mesh->n_elements());
  A.setFromTriplets(trips.begin(), trips.end());
  return A;
}

MassStructure mass_structure(const Mesh& mesh) { return MassStructure{&mesh}; }

double inner_product_V(const DgField& u, const DgField& v) {
  if (&u.mesh() != &v.mesh())
    throw std::invalid_argument("inner_product_V: fields on different meshes");
  const Mesh& mesh = u.mesh();
  const Eigen::Matrix4d G = MassStructure::reference_gram();
  double s = 0;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    double V = mesh.elements[e].volume;
    for (int c = 0; c < 6; ++c) {
      double w = weight_of(mesh, e, c) * V;
      s += w * u.coeffs().segment<4>(24 * e + 4 * c).dot(
                   G * v.coeffs().segment<4>(24 * e + 4 * c));
    }
  }
  return s;
}

double norm_V(const DgField& u) { return std::sqrt(std::max(0.0, inner_product_V(u, u))); }

Eigen::VectorXd load_vector(const AnalyticField& f, const Mesh& mesh, int quad_degree) {
  const TetRule& rule = tet_rule(quad_degree);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(24 * mesh.n_elements());
  for (int e = 0; e < mesh.n_elements(); ++e) {
    double V = mesh.elements[e].volume;
    for (int q = 0; q < rule.w.size(); ++q) {
      Vector3d x = mesh.point(e, rule.bary.col(q));
      Vector6d val = f.value(x);
      if (!val.allFinite()) throw std::runtime_error("load_vector: non-finite field value");
      double wq = V * rule.w[q];
      for (int c = 0; c < 6; ++c) {
        double w = weight_of(mesh, e, c) * wq * val[c];
        for (int i = 0; i < 4; ++i) b[DgField::dof(e, c, i)] += w * rule.bary(i, q);
      }
    }
  }
  return b;
}

DgField project(const AnalyticField& f, const Mesh& mesh, int quad_degree) {
  MassStructure mass = mass_structure(mesh);
  return DgField(mesh, mass.solve(load_vector(f, mesh, quad_degree)));
}

double error_norm_V(const DgField& u, const AnalyticField& f, int quad_degree) {
  const Mesh& mesh = u.mesh();
  const TetRule& rule = tet_rule(quad_degree);
  double s = 0;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    double V = mesh.elements[e].volume;
    for (int q = 0; q < rule.w.size(); ++q) {
      Vector3d x = mesh.point(e, rule.bary.col(q));
      Vector6d d = u.eval(e, x) - f.value(x);
      double wq = V * rule.w[q];
      s += wq * (mesh.eps[e] * d.head<3>().squaredNorm() +
                 mesh.mu[e] * d.tail<3>().squaredNorm());
    }
  }
  return std::sqrt(std::max(0.0, s));
}

double norm_V_analytic(const AnalyticField& f, const Mesh& mesh, int quad_degree) {
  const TetRule& rule = tet_rule(quad_degree);
  double s = 0;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    double V = mesh.elements[e].volume;
    for (int q = 0; q < rule.w.size(); ++q) {
      Vector3d x = mesh.point(e, rule.bary.col(q));
      Vector6d v = f.value(x);
      double wq = V * rule.w[q];
      s += wq * (mesh.eps[e] * v.head<3>().squaredNorm() +
                 mesh.mu[e] * v.tail<3>().squaredNorm());
    }
  }
  return std::sqrt(std::max(0.0, s));
}

FaceJump face_jump(const DgField& u, int face_id) {
  const Mesh& mesh = u.mesh();
  const Face& F = mesh.faces[face_id];
  if (F.neighbor < 0) throw std::invalid_argument("face_jump: exterior face");
  FaceJump j;
  for (int i = 0; i < 3; ++i)
    j.nodal.col(i) =
        u.nodal(F.neighbor, F.neighbor_local[i]) - u.nodal(F.owner, F.owner_local[i]);
  return j;
}

double broken_seminorm(const AnalyticField& f, const Mesh& mesh, int k, int quad_degree,
                       double fd_rel) {
  if (k != 1 && k != 2) throw std::invalid_argument("broken_seminorm: k must be 1 or 2");
  const TetRule& rule = tet_rule(quad_degree);
  const double step = fd_rel * mesh.h;
  double s = 0;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    double V = mesh.elements[e].volume;
    for (int q = 0; q < rule.w.size(); ++q) {
      Vector3d x = mesh.point(e, rule.bary.col(q));
      double wq = V * rule.w[q];
      if (k == 1) {
        s += wq * jacobian_of(f, x, step).squaredNorm();
      } else {
        // Hessian columns by differencing the Jacobian (exact zero when the
        // Jacobian is constant); FD^2 of the value otherwise.
        for (int d = 0; d < 3; ++d) {
          Vector3d xp = x, xm = x;
          xp[d] += step;
          xm[d] -= step;
          Matrix6x3d dJ =
              (jacobian_of(f, xp, step) - jacobian_of(f, xm, step)) / (2.0 * step);
          s += wq * dJ.squaredNorm();
        }
      }
    }
  }
  return std::sqrt(std::max(0.0, s));
}

double face_projection_error_sq(const DgField& pf, const AnalyticField& f, int quad_degree) {
  // One-sided traces, summed per element side (interior faces twice).
  const Mesh& mesh = pf.mesh();
  const TriRule& rule = tri_rule(quad_degree);
  double s = 0;
  for (const Face& F : mesh.faces) {
    for (int side = 0; side < (F.neighbor >= 0 ? 2 : 1); ++side) {
      int elem = side == 0 ? F.owner : F.neighbor;
      for (int q = 0; q < rule.w.size(); ++q) {
        Vector3d x = Vector3d::Zero();
        for (int i = 0; i < 3; ++i) x += rule.bary(i, q) * mesh.vertices[F.v[i]];
        Vector6d d = f.value(x) - pf.eval(elem, x);
        s += F.area * rule.w[q] * d.squaredNorm();
      }
    }
  }
  return s;
}

void write_vtk(const DgField& u, const std::string& path) {
  const Mesh& mesh = u.mesh();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "# vtk DataFile Version 3.0\nsmaxdg field\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out.precision(17);
  out << "POINTS " << 4 * mesh.n_elements() << " double\n";
  for (const auto& el : mesh.elements)
    for (int i = 0; i < 4; ++i) {
      const Vector3d& v = mesh.vertices[el.v[i]];
      out << v[0] << " " << v[1] << " " << v[2] << "\n";
    }
  out << "CELLS " << mesh.n_elements() << " " << 5 * mesh.n_elements() << "\n";
  for (int e = 0; e < mesh.n_elements(); ++e)
    out << "4 " << 4 * e << " " << 4 * e + 1 << " " << 4 * e + 2 << " " << 4 * e + 3 << "\n";
  out << "CELL_TYPES " << mesh.n_elements() << "\n";
  for (int e = 0; e < mesh.n_elements(); ++e) out << "10\n";
  out << "POINT_DATA " << 4 * mesh.n_elements() << "\nVECTORS E double\n";
  for (int e = 0; e < mesh.n_elements(); ++e)
    for (int i = 0; i < 4; ++i) {
      Vector6d v = u.nodal(e, i);
      out << v[0] << " " << v[1] << " " << v[2] << "\n";
    }
  out << "VECTORS H double\n";
  for (int e = 0; e < mesh.n_elements(); ++e)
    for (int i = 0; i < 4; ++i) {
      Vector6d v = u.nodal(e, i);
      out << v[3] << " " << v[4] << " " << v[5] << "\n";
    }
}

}  // namespace smaxdg
