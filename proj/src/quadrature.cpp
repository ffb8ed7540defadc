#include "smaxdg/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace smaxdg {

void gauss_legendre_01(int m, Eigen::VectorXd& nodes, Eigen::VectorXd& weights) {
  if (m < 1) throw std::invalid_argument("gauss_legendre_01: m >= 1 required");
  nodes.resize(m);
  weights.resize(m);
  for (int i = 0; i < m; ++i) {
    // Newton iteration on P_m with Chebyshev initial guess.
    double x = std::cos(M_PI * (i + 0.75) / (m + 0.5));
    double dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= m; ++k) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = m * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = 0.5 * (1.0 - x);  // descending x -> ascending node
    weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
}

namespace {

TetRule make_tet_rule(int degree) {
  int m = (degree + 4) / 2;  // ceil((p+3)/2): covers the Duffy Jacobian
  Eigen::VectorXd xu, wu;
  gauss_legendre_01(m, xu, wu);
  TetRule r;
  r.bary.resize(4, m * m * m);
  r.w.resize(m * m * m);
  int idx = 0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < m; ++k) {
        double u = xu[i], v = xu[j], w = xu[k];
        double x = u;
        double y = v * (1.0 - u);
        double z = w * (1.0 - u) * (1.0 - v);
        r.bary(0, idx) = 1.0 - x - y - z;
        r.bary(1, idx) = x;
        r.bary(2, idx) = y;
        r.bary(3, idx) = z;
        // Duffy Jacobian (1-u)^2 (1-v); x6 normalizes to unit total weight.
        r.w[idx] = 6.0 * wu[i] * wu[j] * wu[k] * (1.0 - u) * (1.0 - u) * (1.0 - v);
        ++idx;
      }
  return r;
}

TriRule make_tri_rule(int degree) {
  int m = (degree + 3) / 2;  // ceil((p+2)/2)
  Eigen::VectorXd xu, wu;
  gauss_legendre_01(m, xu, wu);
  TriRule r;
  r.bary.resize(3, m * m);
  r.w.resize(m * m);
  int idx = 0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      double u = xu[i], v = xu[j];
      double x = u;
      double y = v * (1.0 - u);
      r.bary(0, idx) = 1.0 - x - y;
      r.bary(1, idx) = x;
      r.bary(2, idx) = y;
      r.w[idx] = 2.0 * wu[i] * wu[j] * (1.0 - u);
      ++idx;
    }
  return r;
}

std::mutex rule_mutex;

}  // namespace

const TetRule& tet_rule(int degree) {
  static std::map<int, TetRule> cache;
  std::lock_guard<std::mutex> lock(rule_mutex);
  auto it = cache.find(degree);
  if (it == cache.end()) it = cache.emplace(degree, make_tet_rule(degree)).first;
  return it->second;
}

const TriRule& tri_rule(int degree) {
  static std::map<int, TriRule> cache;
  std::lock_guard<std::mutex> lock(rule_mutex);
  auto it = cache.find(degree);
  if (it == cache.end()) it = cache.emplace(degree, make_tri_rule(degree)).first;
  return it->second;
}

}  // namespace smaxdg
