#include "smaxdg/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

namespace smaxdg {

bool Cuboid::on_boundary(const Vector3d& x, double tol) const {
  for (int d = 0; d < 3; ++d) {
    if (std::abs(x[d] - lo[d]) <= tol || std::abs(x[d] - hi[d]) <= tol) return true;
  }
  return false;
}

MediumSpec MediumSpec::constant(double eps, double mu) {
  if (eps <= 0 || mu <= 0) throw std::invalid_argument("medium coefficients must be positive");
  MediumSpec m;
  m.eps_ = eps;
  m.mu_ = mu;
  m.delta_ = std::min(eps, mu);
  return m;
}

MediumSpec MediumSpec::blocks(std::vector<MediumBlock> blocks, double delta) {
  if (delta <= 0) throw std::invalid_argument("medium floor delta must be positive");
  for (const auto& b : blocks) {
    if (b.eps < delta || b.mu < delta)
      throw std::invalid_argument("block medium coefficients below declared delta");
  }
  MediumSpec m;
  m.delta_ = delta;
  m.blocks_ = std::move(blocks);
  return m;
}

std::pair<double, double> MediumSpec::at(const Vector3d& x) const {
  if (is_constant()) return {eps_, mu_};
  for (const auto& b : blocks_) {
    bool inside = true;
    for (int d = 0; d < 3; ++d)
      inside = inside && x[d] >= b.box.lo[d] && x[d] <= b.box.hi[d];
    if (inside) return {b.eps, b.mu};
  }
  throw std::runtime_error("medium blocks do not cover the element centroid");
}

Vector3d Mesh::point(int elem, const Eigen::Vector4d& bary) const {
  const Element& K = elements[elem];
  Vector3d x = Vector3d::Zero();
  for (int i = 0; i < 4; ++i) x += bary[i] * vertices[K.v[i]];
  return x;
}

int Mesh::locate(const Vector3d& x) const {
  const Vector3d ext = domain.extent();
  std::array<int, 3> c;
  for (int d = 0; d < 3; ++d) {
    double t = (x[d] - domain.lo[d]) / ext[d] * subdivisions[d];
    int i = static_cast<int>(std::floor(t));
    i = std::clamp(i, 0, subdivisions[d] - 1);
    c[d] = i;
  }
  int cell = c[0] + subdivisions[0] * (c[1] + subdivisions[1] * c[2]);
  for (int t = 0; t < 6; ++t) {
    int e = 6 * cell + t;
    Eigen::Vector4d lam = elements[e].lambda(x);
    if (lam.minCoeff() >= -1e-12) return e;
  }
  return -1;
}

namespace {

struct FaceKey {
  std::array<int, 3> v;  // sorted
  bool operator<(const FaceKey& o) const { return v < o.v; }
};

constexpr int kKuhnPerms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                  {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};

}  // namespace

Mesh build_structured_mesh(const Cuboid& domain, const std::array<int, 3>& n,
                           const MediumSpec& medium) {
  for (int d = 0; d < 3; ++d) {
    if (!(domain.lo[d] < domain.hi[d]))
      throw std::invalid_argument("degenerate domain extents");
    if (n[d] < 1) throw std::invalid_argument("subdivisions must be >= 1");
  }

  Mesh mesh;
  mesh.domain = domain;
  mesh.subdivisions = n;

  const int nx = n[0], ny = n[1], nz = n[2];
  const Vector3d ext = domain.extent();
  const Vector3d dx(ext[0] / nx, ext[1] / ny, ext[2] / nz);

  // Block boundaries must lie on grid planes.
  if (!medium.is_constant()) {
    for (const auto& b : medium.block_list()) {
      for (int d = 0; d < 3; ++d) {
        for (double coord : {b.box.lo[d], b.box.hi[d]}) {
          double t = (coord - domain.lo[d]) / dx[d];
          if (std::abs(t - std::round(t)) > 1e-12 * std::max(1.0, std::abs(t)))
            throw std::invalid_argument("medium block boundary not aligned with grid planes");
        }
      }
    }
  }

  auto vid = [&](int i, int j, int k) { return i + (nx + 1) * (j + (ny + 1) * k); };

  mesh.vertices.resize(static_cast<size_t>(nx + 1) * (ny + 1) * (nz + 1));
  for (int k = 0; k <= nz; ++k)
    for (int j = 0; j <= ny; ++j)
      for (int i = 0; i <= nx; ++i)
        mesh.vertices[vid(i, j, k)] =
            domain.lo + Vector3d(i * dx[0], j * dx[1], k * dx[2]);

  mesh.elements.reserve(static_cast<size_t>(nx) * ny * nz * 6);
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        for (const auto& perm : kKuhnPerms) {
          std::array<int, 3> c{i, j, k};
          Element el;
          el.v[0] = vid(c[0], c[1], c[2]);
          for (int s = 0; s < 3; ++s) {
            ++c[perm[s]];
            el.v[s + 1] = vid(c[0], c[1], c[2]);
          }
          mesh.elements.push_back(el);
        }
      }

  // Geometry: signed volume made positive, barycentric coordinate tables.
  double max_diam = 0;
  for (auto& el : mesh.elements) {
    auto signed_vol = [&](const std::array<int, 4>& v) {
      Matrix3d J;
      for (int c = 0; c < 3; ++c)
        J.col(c) = mesh.vertices[v[c + 1]] - mesh.vertices[v[0]];
      return J.determinant() / 6.0;
    };
    if (signed_vol(el.v) < 0) std::swap(el.v[2], el.v[3]);
    el.volume = signed_vol(el.v);
    if (el.volume <= 0) throw std::runtime_error("non-positive element volume");

    Eigen::Matrix4d M;
    for (int c = 0; c < 4; ++c) {
      M.col(c).head<3>() = mesh.vertices[el.v[c]];
      M(3, c) = 1.0;
    }
    Eigen::Matrix4d inv = M.inverse();
    el.bary = inv;  // row i: [grad lambda_i, const]
    el.centroid = Vector3d::Zero();
    for (int c = 0; c < 4; ++c) el.centroid += 0.25 * mesh.vertices[el.v[c]];

    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b)
        max_diam = std::max(max_diam,
                            (mesh.vertices[el.v[a]] - mesh.vertices[el.v[b]]).norm());
  }
  mesh.h = max_diam;

  // Media per element.
  mesh.eps.resize(mesh.elements.size());
  mesh.mu.resize(mesh.elements.size());
  for (size_t e = 0; e < mesh.elements.size(); ++e) {
    auto [ee, mm] = medium.at(mesh.elements[e].centroid);
    mesh.eps[e] = ee;
    mesh.mu[e] = mm;
  }

  // Face topology from sorted vertex triples; deterministic order.
  std::map<FaceKey, std::vector<std::pair<int, int>>> incidence;  // -> (elem, local face)
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const auto& v = mesh.elements[e].v;
    for (int f = 0; f < 4; ++f) {
      FaceKey key;
      int out = 0;
      for (int c = 0; c < 4; ++c)
        if (c != f) key.v[out++] = v[c];
      std::sort(key.v.begin(), key.v.end());
      incidence[key].push_back({e, f});
    }
  }

  mesh.faces.reserve(incidence.size());
  for (const auto& [key, inc] : incidence) {
    if (inc.size() > 2) throw std::runtime_error("face shared by more than two elements");
    Face face;
    face.v = key.v;
    face.owner = inc[0].first;
    face.neighbor = inc.size() == 2 ? inc[1].first : -1;
    if (face.neighbor >= 0 && face.neighbor < face.owner)
      std::swap(face.owner, face.neighbor);  // normal points small index -> large

    const Vector3d& a = mesh.vertices[face.v[0]];
    const Vector3d& b = mesh.vertices[face.v[1]];
    const Vector3d& c = mesh.vertices[face.v[2]];
    Vector3d nrm = (b - a).cross(c - a);
    face.area = 0.5 * nrm.norm();
    nrm.normalize();
    Vector3d fc = (a + b + c) / 3.0;
    if (nrm.dot(fc - mesh.elements[face.owner].centroid) < 0) nrm = -nrm;
    face.normal = nrm;

    auto local_of = [&](int elem, int gv) {
      const auto& ev = mesh.elements[elem].v;
      for (int c2 = 0; c2 < 4; ++c2)
        if (ev[c2] == gv) return c2;
      throw std::runtime_error("face vertex not found in element");
    };
    for (int i = 0; i < 3; ++i) {
      face.owner_local[i] = local_of(face.owner, face.v[i]);
      if (face.neighbor >= 0) face.neighbor_local[i] = local_of(face.neighbor, face.v[i]);
    }

    int fid = static_cast<int>(mesh.faces.size());
    if (face.neighbor >= 0)
      mesh.interior_faces.push_back(fid);
    else
      mesh.exterior_faces.push_back(fid);
    mesh.faces.push_back(face);
  }

  // Back-link faces into elements.
  std::vector<int> counts(mesh.elements.size(), 0);
  for (int fid = 0; fid < mesh.n_faces(); ++fid) {
    const Face& f = mesh.faces[fid];
    mesh.elements[f.owner].face_ids[counts[f.owner]++] = fid;
    if (f.neighbor >= 0) mesh.elements[f.neighbor].face_ids[counts[f.neighbor]++] = fid;
  }
  for (int e = 0; e < mesh.n_elements(); ++e)
    if (counts[e] != 4) throw std::runtime_error("element without four faces");

  double vol_sum = 0;
  for (const auto& el : mesh.elements) vol_sum += el.volume;
  if (std::abs(vol_sum - domain.volume()) > 1e-12 * domain.volume())
    throw std::runtime_error("element volumes do not sum to the domain volume");

  return mesh;
}

std::pair<std::vector<int>, std::vector<int>> classify_faces(const Mesh& mesh) {
  std::vector<int> interior, exterior;
  const double tol = 1e-12 * std::max(1.0, mesh.domain.extent().maxCoeff());
  for (int fid = 0; fid < mesh.n_faces(); ++fid) {
    const Face& f = mesh.faces[fid];
    if (f.owner < 0) throw std::runtime_error("face without owner");
    if (f.neighbor >= 0) {
      if (f.neighbor == f.owner) throw std::runtime_error("face adjacency inconsistency");
      interior.push_back(fid);
    } else {
      for (int i = 0; i < 3; ++i)
        if (!mesh.domain.on_boundary(mesh.vertices[f.v[i]], tol))
          throw std::runtime_error("exterior face vertex away from the boundary");
      exterior.push_back(fid);
    }
  }
  if (interior.size() + exterior.size() != mesh.faces.size())
    throw std::runtime_error("face partition does not cover all faces");
  return {interior, exterior};
}

void write_vtk(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "# vtk DataFile Version 3.0\nsmaxdg mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.vertices.size() << " double\n";
  out.precision(17);
  for (const auto& v : mesh.vertices) out << v[0] << " " << v[1] << " " << v[2] << "\n";
  out << "CELLS " << mesh.elements.size() << " " << 5 * mesh.elements.size() << "\n";
  for (const auto& el : mesh.elements)
    out << "4 " << el.v[0] << " " << el.v[1] << " " << el.v[2] << " " << el.v[3] << "\n";
  out << "CELL_TYPES " << mesh.elements.size() << "\n";
  for (size_t i = 0; i < mesh.elements.size(); ++i) out << "10\n";
  out << "CELL_DATA " << mesh.elements.size() << "\nSCALARS eps double 1\nLOOKUP_TABLE default\n";
  for (double e : mesh.eps) out << e << "\n";
  out << "SCALARS mu double 1\nLOOKUP_TABLE default\n";
  for (double m : mesh.mu) out << m << "\n";
}

}  // namespace smaxdg
