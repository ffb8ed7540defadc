#include "smaxdg/maxwell_operator.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "smaxdg/quadrature.hpp"

namespace smaxdg {

FluxCoefficients flux_coefficients(double eps_K, double mu_K, double eps_KF, double mu_KF) {
  if (eps_K <= 0 || mu_K <= 0 || eps_KF <= 0 || mu_KF <= 0)
    throw std::invalid_argument("flux_coefficients: medium coefficients must be positive");
  const double cK = 1.0 / std::sqrt(eps_K * mu_K);
  const double cKF = 1.0 / std::sqrt(eps_KF * mu_KF);
  FluxCoefficients f;
  const double de = cKF * eps_KF + cK * eps_K;
  const double dm = cKF * mu_KF + cK * mu_K;
  f.alpha_K = cKF * eps_KF / de;
  f.alpha_KF = cK * eps_K / de;
  f.beta_K = cKF * mu_KF / dm;
  f.beta_KF = cK * mu_K / dm;
  f.gamma_F = 1.0 / dm;
  f.delta_F = 1.0 / de;
  return f;
}

FluxCoefficients exterior_flux_coefficients(double eps_K, double mu_K) {
  return flux_coefficients(eps_K, mu_K, eps_K, mu_K);
}

namespace {

// P1 vertex Gram on a triangle, scaled by area: int rho_i rho_j = area/12 (1+delta_ij).
inline Eigen::Matrix3d tri_gram(double area) {
  return area / 12.0 * (Eigen::Matrix3d::Identity() + Eigen::Matrix3d::Ones());
}

struct Assembler {
  std::vector<Eigen::Triplet<double>>& trips;
  // Scatter a component-coupling block: rows (elem_r, comp_base_r + c, local
  // vertices vr), cols (elem_c, comp_base_c + m, vc), entry Mv(j,i)*Cmat(c,m).
  void scatter(int elem_r, int comp_r, const std::array<int, 3>& vr, int elem_c,
               int comp_c, const std::array<int, 3>& vc, const Eigen::Matrix3d& Mv,
               const Matrix3d& Cmat, double scale) {
    if (scale == 0.0) return;
    for (int c = 0; c < 3; ++c)
      for (int m = 0; m < 3; ++m) {
        if (Cmat(c, m) == 0.0) continue;
        for (int j = 0; j < 3; ++j)
          for (int i = 0; i < 3; ++i)
            trips.emplace_back(DgField::dof(elem_r, comp_r + c, vr[j]),
                               DgField::dof(elem_c, comp_c + m, vc[i]),
                               scale * Mv(j, i) * Cmat(c, m));
      }
  }
};

}  // namespace

DiscreteMaxwellOperator::DiscreteMaxwellOperator(const Mesh& mesh, SparseMatrix vol,
                                                 SparseMatrix face)
    : mesh_(&mesh), vol_(std::move(vol)), face_(std::move(face)) {
  form_ = vol_ + face_;
  mass_ = mass_structure(mesh);
}

Eigen::VectorXd DiscreteMaxwellOperator::apply(const Eigen::VectorXd& u) const {
  return mass_.solve(form_ * u);
}

double DiscreteMaxwellOperator::bilinear(const Eigen::VectorXd& u,
                                         const Eigen::VectorXd& v) const {
  return v.dot(form_ * u);
}

DiscreteMaxwellOperator assemble(const Mesh& mesh) {
  const int n = 24 * mesh.n_elements();
  std::vector<Eigen::Triplet<double>> vol_trips, face_trips;
  vol_trips.reserve(mesh.n_elements() * 288);
  Assembler face_asm{face_trips};

  // Volume curl terms: <curl H, psi> - <curl E, phi> with curl(lambda_i e_m)
  // constant and int_K lambda_j = V/4.
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const Element& K = mesh.elements[e];
    const double quarterV = K.volume / 4.0;
    for (int i = 0; i < 4; ++i) {
      const Vector3d g = K.grad_lambda(i);
      for (int m = 0; m < 3; ++m) {
        const Vector3d curl = g.cross(Vector3d::Unit(m));
        for (int c = 0; c < 3; ++c) {
          if (curl[c] == 0.0) continue;
          for (int j = 0; j < 4; ++j) {
            vol_trips.emplace_back(DgField::dof(e, c, j), DgField::dof(e, 3 + m, i),
                                   quarterV * curl[c]);
            vol_trips.emplace_back(DgField::dof(e, 3 + c, j), DgField::dof(e, m, i),
                                   -quarterV * curl[c]);
          }
        }
      }
    }
  }

  for (int fid = 0; fid < mesh.n_faces(); ++fid) {
    const Face& F = mesh.faces[fid];
    const Eigen::Matrix3d Mv = tri_gram(F.area);
    const Matrix3d N = skew(F.normal);
    const Matrix3d Pt = tangential(F.normal);

    if (F.neighbor >= 0) {
      const int K = F.owner, L = F.neighbor;
      const FluxCoefficients cf =
          flux_coefficients(mesh.eps[K], mesh.mu[K], mesh.eps[L], mesh.mu[L]);
      const std::array<int, 3>& TK = F.owner_local;
      const std::array<int, 3>& TL = F.neighbor_local;

      struct Side {
        int elem;
        const std::array<int, 3>* verts;
        double sign;   // sign in the jump [[.]] = (.)_L - (.)_K
        double alpha;  // test-side averaging weights
        double beta;
      };
      const Side sides[2] = {{K, &TK, -1.0, cf.alpha_K, cf.beta_K},
                             {L, &TL, +1.0, cf.alpha_KF, cf.beta_KF}};

      for (const Side& t : sides) {    // test side
        for (const Side& s : sides) {  // trial side
          // <n x [[H]], beta_K psi_K + beta_KF psi_KF>
          face_asm.scatter(t.elem, 0, *t.verts, s.elem, 3, *s.verts, Mv, N,
                           t.beta * s.sign);
          // -<n x [[E]], alpha_K phi_K + alpha_KF phi_KF>
          face_asm.scatter(t.elem, 3, *t.verts, s.elem, 0, *s.verts, Mv, N,
                           -t.alpha * s.sign);
          // -gamma_F <n x [[E]], n x [[psi]]>
          face_asm.scatter(t.elem, 0, *t.verts, s.elem, 0, *s.verts, Mv, Pt,
                           -cf.gamma_F * t.sign * s.sign);
          // -delta_F <n x [[H]], n x [[phi]]>
          face_asm.scatter(t.elem, 3, *t.verts, s.elem, 3, *s.verts, Mv, Pt,
                           -cf.delta_F * t.sign * s.sign);
        }
      }
    } else {
      const int K = F.owner;
      const FluxCoefficients cf = exterior_flux_coefficients(mesh.eps[K], mesh.mu[K]);
      const std::array<int, 3>& TK = F.owner_local;
      // <n x E, phi> - 2 gamma_F <n x E, n x psi>
      face_asm.scatter(K, 3, TK, K, 0, TK, Mv, N, 1.0);
      face_asm.scatter(K, 0, TK, K, 0, TK, Mv, Pt, -2.0 * cf.gamma_F);
    }
  }

  SparseMatrix vol(n, n), face(n, n);
  vol.setFromTriplets(vol_trips.begin(), vol_trips.end());
  face.setFromTriplets(face_trips.begin(), face_trips.end());
  return DiscreteMaxwellOperator(mesh, std::move(vol), std::move(face));
}

double face_dissipation(const DgField& u) {
  const Mesh& mesh = u.mesh();
  double s = 0;
  for (int fid = 0; fid < mesh.n_faces(); ++fid) {
    const Face& F = mesh.faces[fid];
    const Eigen::Matrix3d Mv = tri_gram(F.area);
    const Matrix3d Pt = tangential(F.normal);
    if (F.neighbor >= 0) {
      const FluxCoefficients cf = flux_coefficients(
          mesh.eps[F.owner], mesh.mu[F.owner], mesh.eps[F.neighbor], mesh.mu[F.neighbor]);
      FaceJump j = face_jump(u, fid);
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
          s += cf.gamma_F * Mv(a, b) *
               j.nodal.col(a).head<3>().dot(Pt * j.nodal.col(b).head<3>());
          s += cf.delta_F * Mv(a, b) *
               j.nodal.col(a).tail<3>().dot(Pt * j.nodal.col(b).tail<3>());
        }
    } else {
      const FluxCoefficients cf =
          exterior_flux_coefficients(mesh.eps[F.owner], mesh.mu[F.owner]);
      Eigen::Matrix<double, 3, 3> Enodal;
      for (int i = 0; i < 3; ++i)
        Enodal.col(i) = u.nodal(F.owner, F.owner_local[i]).head<3>();
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          s += 2.0 * cf.gamma_F * Mv(a, b) * Enodal.col(a).dot(Pt * Enodal.col(b));
    }
  }
  return s;
}

double mixed_form(const DgField& u, const DgField& v) {
  if (&u.mesh() != &v.mesh())
    throw std::invalid_argument("mixed_form: fields on different meshes");
  const Mesh& mesh = u.mesh();
  double s = 0;

  // sum_K <H, curl psi> - <E, curl phi>, curl of the test field constant per K.
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const Element& K = mesh.elements[e];
    Vector3d curl_psi = Vector3d::Zero(), curl_phi = Vector3d::Zero();
    Vector3d meanE = Vector3d::Zero(), meanH = Vector3d::Zero();
    for (int i = 0; i < 4; ++i) {
      const Vector3d g = K.grad_lambda(i);
      Vector6d vn = v.nodal(e, i), un = u.nodal(e, i);
      curl_psi += g.cross(vn.head<3>());
      curl_phi += g.cross(vn.tail<3>());
      meanE += 0.25 * un.head<3>();
      meanH += 0.25 * un.tail<3>();
    }
    s += K.volume * (meanH.dot(curl_psi) - meanE.dot(curl_phi));
  }

  for (int fid = 0; fid < mesh.n_faces(); ++fid) {
    const Face& F = mesh.faces[fid];
    const Eigen::Matrix3d Mv = tri_gram(F.area);
    const Vector3d n = F.normal;
    if (F.neighbor >= 0) {
      const int K = F.owner, L = F.neighbor;
      const FluxCoefficients cf =
          flux_coefficients(mesh.eps[K], mesh.mu[K], mesh.eps[L], mesh.mu[L]);
      FaceJump jv = face_jump(v, fid);
      Eigen::Matrix3d w, z, jpsi, jphi;
      for (int i = 0; i < 3; ++i) {
        Vector6d uK = u.nodal(K, F.owner_local[i]);
        Vector6d uL = u.nodal(L, F.neighbor_local[i]);
        Vector3d jumpE = uL.head<3>() - uK.head<3>();
        Vector3d jumpH = uL.tail<3>() - uK.tail<3>();
        w.col(i) = cf.beta_K * uL.tail<3>() + cf.beta_KF * uK.tail<3>() -
                   cf.gamma_F * n.cross(jumpE);
        z.col(i) = cf.alpha_K * uL.head<3>() + cf.alpha_KF * uK.head<3>() +
                   cf.delta_F * n.cross(jumpH);
        jpsi.col(i) = n.cross(jv.nodal.col(i).head<3>().eval());
        jphi.col(i) = n.cross(jv.nodal.col(i).tail<3>().eval());
      }
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          s += Mv(a, b) * (w.col(a).dot(jpsi.col(b)) - z.col(a).dot(jphi.col(b)));
    } else {
      const int K = F.owner;
      const FluxCoefficients cf = exterior_flux_coefficients(mesh.eps[K], mesh.mu[K]);
      Eigen::Matrix3d nH, psiM, nE, npsi;
      for (int i = 0; i < 3; ++i) {
        Vector6d uK = u.nodal(K, F.owner_local[i]);
        Vector6d vK = v.nodal(K, F.owner_local[i]);
        nH.col(i) = n.cross(uK.tail<3>().eval());
        nE.col(i) = n.cross(uK.head<3>().eval());
        psiM.col(i) = vK.head<3>();
        npsi.col(i) = n.cross(vK.head<3>().eval());
      }
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          s += Mv(a, b) *
               (nH.col(a).dot(psiM.col(b)) - 2.0 * cf.gamma_F * nE.col(a).dot(npsi.col(b)));
    }
  }
  return s;
}

double mixed_form(const AnalyticField& u, const DgField& v, int quad_degree) {
  const Mesh& mesh = v.mesh();
  const TetRule& vrule = tet_rule(quad_degree);
  const TriRule& frule = tri_rule(quad_degree);
  double s = 0;

  for (int e = 0; e < mesh.n_elements(); ++e) {
    const Element& K = mesh.elements[e];
    Vector3d curl_psi = Vector3d::Zero(), curl_phi = Vector3d::Zero();
    for (int i = 0; i < 4; ++i) {
      const Vector3d g = K.grad_lambda(i);
      Vector6d vn = v.nodal(e, i);
      curl_psi += g.cross(vn.head<3>());
      curl_phi += g.cross(vn.tail<3>());
    }
    Vector3d intE = Vector3d::Zero(), intH = Vector3d::Zero();
    for (int q = 0; q < vrule.w.size(); ++q) {
      Vector6d val = u.value(mesh.point(e, vrule.bary.col(q)));
      intE += K.volume * vrule.w[q] * val.head<3>();
      intH += K.volume * vrule.w[q] * val.tail<3>();
    }
    s += intH.dot(curl_psi) - intE.dot(curl_phi);
  }

  for (int fid = 0; fid < mesh.n_faces(); ++fid) {
    const Face& F = mesh.faces[fid];
    const Vector3d n = F.normal;
    for (int q = 0; q < frule.w.size(); ++q) {
      Vector3d x = Vector3d::Zero();
      Eigen::Vector3d bq = frule.bary.col(q);
      for (int i = 0; i < 3; ++i) x += bq[i] * mesh.vertices[F.v[i]];
      Vector6d uval = u.value(x);
      const double wq = F.area * frule.w[q];
      if (F.neighbor >= 0) {
        // Continuous u: averages collapse, jump terms of u vanish.
        Vector6d vK = v.eval(F.owner, x), vL = v.eval(F.neighbor, x);
        Vector3d jpsi = n.cross((vL.head<3>() - vK.head<3>()).eval());
        Vector3d jphi = n.cross((vL.tail<3>() - vK.tail<3>()).eval());
        s += wq * (uval.tail<3>().dot(jpsi) - uval.head<3>().dot(jphi));
      } else {
        const FluxCoefficients cf =
            exterior_flux_coefficients(mesh.eps[F.owner], mesh.mu[F.owner]);
        Vector6d vK = v.eval(F.owner, x);
        Vector3d nH = n.cross(uval.tail<3>().eval());
        Vector3d nE = n.cross(uval.head<3>().eval());
        Vector3d npsi = n.cross(vK.head<3>().eval());
        s += wq * (nH.dot(vK.head<3>()) - 2.0 * cf.gamma_F * nE.dot(npsi));
      }
    }
  }
  return s;
}

Eigen::VectorXd definition_load(const AnalyticField& u, const Mesh& mesh, int quad_degree) {
  const TetRule& vrule = tet_rule(quad_degree);
  const TriRule& frule = tri_rule(quad_degree);
  const double fd_step = 1e-5 * mesh.h;
  Eigen::VectorXd r = Eigen::VectorXd::Zero(24 * mesh.n_elements());

  for (int e = 0; e < mesh.n_elements(); ++e) {
    const double V = mesh.elements[e].volume;
    for (int q = 0; q < vrule.w.size(); ++q) {
      Vector3d x = mesh.point(e, vrule.bary.col(q));
      Vector6d c = curl_of(u, x, fd_step);
      const double wq = V * vrule.w[q];
      for (int comp = 0; comp < 3; ++comp)
        for (int j = 0; j < 4; ++j) {
          r[DgField::dof(e, comp, j)] += wq * vrule.bary(j, q) * c[3 + comp];
          r[DgField::dof(e, 3 + comp, j)] -= wq * vrule.bary(j, q) * c[comp];
        }
    }
  }

  for (int fid : mesh.exterior_faces) {
    const Face& F = mesh.faces[fid];
    const Vector3d n = F.normal;
    const Matrix3d Pt = tangential(n);
    const FluxCoefficients cf =
        exterior_flux_coefficients(mesh.eps[F.owner], mesh.mu[F.owner]);
    for (int q = 0; q < frule.w.size(); ++q) {
      Vector3d x = Vector3d::Zero();
      for (int i = 0; i < 3; ++i) x += frule.bary(i, q) * mesh.vertices[F.v[i]];
      Vector3d nE = n.cross(u.value(x).head<3>().eval());
      Vector3d PtE = Pt * u.value(x).head<3>();
      const double wq = F.area * frule.w[q];
      for (int i = 0; i < 3; ++i) {
        const double rho = frule.bary(i, q);
        for (int comp = 0; comp < 3; ++comp) {
          r[DgField::dof(F.owner, 3 + comp, F.owner_local[i])] += wq * rho * nE[comp];
          r[DgField::dof(F.owner, comp, F.owner_local[i])] -=
              2.0 * cf.gamma_F * wq * rho * PtE[comp];
        }
      }
    }
  }
  return r;
}

void write_matrix_market(const SparseMatrix& A, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << A.rows() << " " << A.cols() << " " << A.nonZeros() << "\n";
  out.precision(17);
  for (int k = 0; k < A.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(A, k); it; ++it)
      out << it.row() + 1 << " " << it.col() + 1 << " " << it.value() << "\n";
}

}  // namespace smaxdg
