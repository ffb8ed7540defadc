#include "smaxdg/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

#include "smaxdg/rng.hpp"

namespace smaxdg {

TestSpaceXh::TestSpaceXh(const Mesh& mesh) : mesh_(&mesh) {
  const double tol = 1e-12 * std::max(1.0, mesh.domain.extent().maxCoeff());

  // Interior vertices.
  std::map<int, int> vertex_basis;
  for (int v = 0; v < static_cast<int>(mesh.vertices.size()); ++v) {
    if (mesh.domain.on_boundary(mesh.vertices[v], tol)) continue;
    Basis bf;
    bf.is_vertex = true;
    bf.a = v;
    bf.node = mesh.vertices[v];
    vertex_basis[v] = static_cast<int>(basis_.size());
    basis_.push_back(std::move(bf));
  }

  // Interior edges (midpoint off the boundary).
  std::map<std::pair<int, int>, int> edge_basis;
  for (const auto& el : mesh.elements) {
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) {
        std::pair<int, int> key{std::min(el.v[i], el.v[j]), std::max(el.v[i], el.v[j])};
        if (edge_basis.count(key)) continue;
        Vector3d mid = 0.5 * (mesh.vertices[key.first] + mesh.vertices[key.second]);
        if (mesh.domain.on_boundary(mid, tol)) {
          edge_basis[key] = -1;
          continue;
        }
        Basis bf;
        bf.is_vertex = false;
        bf.a = key.first;
        bf.b = key.second;
        bf.node = mid;
        edge_basis[key] = static_cast<int>(basis_.size());
        basis_.push_back(std::move(bf));
      }
  }

  // Element-local gradient tables. phi_vertex = lambda(2 lambda - 1),
  // grad = (4 lambda - 1) grad lambda; phi_edge = 4 lambda_a lambda_b.
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const Element& el = mesh.elements[e];
    for (int lv = 0; lv < 4; ++lv) {
      auto it = vertex_basis.find(el.v[lv]);
      if (it == vertex_basis.end()) continue;
      ElementPart part;
      part.elem = e;
      for (int w = 0; w < 4; ++w)
        part.grad_at_vertex.col(w) = (w == lv ? 3.0 : -1.0) * el.grad_lambda(lv);
      basis_[it->second].parts.push_back(part);
    }
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) {
        std::pair<int, int> key{std::min(el.v[i], el.v[j]), std::max(el.v[i], el.v[j])};
        auto it = edge_basis.find(key);
        if (it == edge_basis.end() || it->second < 0) continue;
        int la = el.v[i] == key.first ? i : j;  // local index of key.first
        int lb = la == i ? j : i;
        ElementPart part;
        part.elem = e;
        part.grad_at_vertex.setZero();
        for (int w = 0; w < 4; ++w) {
          Vector3d g = Vector3d::Zero();
          if (w == lb) g += 4.0 * el.grad_lambda(la);
          if (w == la) g += 4.0 * el.grad_lambda(lb);
          part.grad_at_vertex.col(w) = g;
        }
        basis_[it->second].parts.push_back(part);
      }
  }
}

double TestSpaceXh::eval(int b, const Vector3d& x) const {
  int e = mesh_->locate(x);
  if (e < 0) return 0.0;
  const Element& el = mesh_->elements[e];
  Eigen::Vector4d lam = el.lambda(x);
  const Basis& bf = basis_[b];
  if (bf.is_vertex) {
    for (int i = 0; i < 4; ++i)
      if (el.v[i] == bf.a) return lam[i] * (2.0 * lam[i] - 1.0);
    return 0.0;
  }
  double la = 0, lb = 0;
  for (int i = 0; i < 4; ++i) {
    if (el.v[i] == bf.a) la = lam[i];
    if (el.v[i] == bf.b) lb = lam[i];
  }
  return 4.0 * la * lb;
}

double TestSpaceXh::grad_norm(int b) const {
  const Eigen::Matrix4d G = MassStructure::reference_gram();
  double s = 0;
  for (const auto& part : basis_[b].parts) {
    double V = mesh_->elements[part.elem].volume;
    for (int d = 0; d < 3; ++d) {
      Eigen::Vector4d g = part.grad_at_vertex.row(d).transpose();
      s += V * g.dot(G * g);
    }
  }
  return std::sqrt(s);
}

DgField TestSpaceXh::gradient_field(int b, int part) const {
  DgField f(*mesh_);
  for (const auto& p : basis_[b].parts)
    for (int w = 0; w < 4; ++w)
      for (int d = 0; d < 3; ++d)
        f.coeffs()[DgField::dof(p.elem, 3 * part + d, w)] = p.grad_at_vertex(d, w);
  return f;
}

double weak_divergence(const DgField& u, const TestSpaceXh& Xh, int b, int part) {
  const Mesh& mesh = Xh.mesh();
  if (&u.mesh() != &mesh)
    throw std::invalid_argument("weak_divergence: field on a different mesh");
  const Eigen::Matrix4d G = MassStructure::reference_gram();
  double s = 0;
  for (const auto& p : Xh.support(b)) {
    const Element& el = mesh.elements[p.elem];
    double w = part == 0 ? mesh.eps[p.elem] : mesh.mu[p.elem];
    for (int d = 0; d < 3; ++d) {
      Eigen::Vector4d fvals, gvals;
      for (int i = 0; i < 4; ++i) fvals[i] = u.coeffs()[DgField::dof(p.elem, 3 * part + d, i)];
      gvals = p.grad_at_vertex.row(d).transpose();
      s -= w * el.volume * fvals.dot(G * gvals);
    }
  }
  return s;
}

double weighted_part_norm(const DgField& u, int part) {
  const Mesh& mesh = u.mesh();
  const Eigen::Matrix4d G = MassStructure::reference_gram();
  double s = 0;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    double w = part == 0 ? mesh.eps[e] : mesh.mu[e];
    double V = mesh.elements[e].volume;
    for (int d = 0; d < 3; ++d) {
      Eigen::Vector4d f = u.coeffs().segment<4>(24 * e + 4 * (3 * part + d));
      s += w * w * V * f.dot(G * f);
    }
  }
  return std::sqrt(s);
}

DivergenceReport divergence_report(const std::vector<Eigen::VectorXd>& trajectory,
                                   const TestSpaceXh& Xh, std::vector<int> subset) {
  if (subset.empty())
    for (int b = 0; b < Xh.dim(); ++b) subset.push_back(b);

  DivergenceReport rep;
  std::vector<std::vector<double>> first(2, std::vector<double>(subset.size(), 0.0));
  for (size_t step = 0; step < trajectory.size(); ++step) {
    DgField u(Xh.mesh(), trajectory[step]);
    for (int part = 0; part < 2; ++part) {
      double pn = weighted_part_norm(u, part);
      for (size_t k = 0; k < subset.size(); ++k) {
        int b = subset[k];
        double r = weak_divergence(u, Xh, b, part);
        double scale = std::max(pn * Xh.grad_norm(b), 1e-300);
        rep.rows.push_back({static_cast<int>(step), b, part, r, scale});
        rep.max_scaled = std::max(rep.max_scaled, std::abs(r) / scale);
        if (step == 0)
          first[part][k] = r;
        else
          rep.max_step_drift =
              std::max(rep.max_step_drift, std::abs(r - first[part][k]) / scale);
      }
    }
  }
  return rep;
}

void DivergenceReport::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "step,basis,part,residual,scale\n";
  out.precision(17);
  for (const auto& r : rows)
    out << r.step << "," << r.basis << "," << r.part << "," << r.residual << "," << r.scale
        << "\n";
}

std::vector<int> basis_subset(const TestSpaceXh& Xh, int min_count, std::uint64_t seed) {
  const Vector3d center = 0.5 * (Xh.mesh().domain.lo + Xh.mesh().domain.hi);
  const double radius = 0.25 * Xh.mesh().domain.extent().norm();
  std::vector<int> chosen;
  std::vector<char> taken(Xh.dim(), 0);
  for (int b = 0; b < Xh.dim(); ++b)
    if ((Xh.node_position(b) - center).norm() <= radius) {
      chosen.push_back(b);
      taken[b] = 1;
    }
  std::uint64_t h = mix64(seed);
  int guard = 0;
  while (static_cast<int>(chosen.size()) < std::min(min_count, Xh.dim()) &&
         guard < 100 * Xh.dim()) {
    h = mix64(h);
    int b = static_cast<int>(h % Xh.dim());
    if (!taken[b]) {
      chosen.push_back(b);
      taken[b] = 1;
    }
    ++guard;
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

}  // namespace smaxdg
