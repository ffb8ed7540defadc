#include "smaxdg/noise.hpp"

#include <cmath>
#include <stdexcept>

#include "smaxdg/dg_space.hpp"
#include "smaxdg/quadrature.hpp"
#include "smaxdg/rng.hpp"

namespace smaxdg {

NoiseModel commuting_noise_from_modes(const std::vector<CavityMode>& modes,
                                      const std::vector<double>& variances,
                                      const MediumSpec& medium) {
  if (!medium.is_constant() || medium.constant_eps() != 1.0 || medium.constant_mu() != 1.0)
    throw std::invalid_argument(
        "commuting_noise_from_modes: requires the constant unit medium");
  if (modes.size() != variances.size())
    throw std::invalid_argument("commuting_noise_from_modes: size mismatch");
  NoiseModel model;
  model.commuting_with_M = true;
  for (size_t j = 0; j < modes.size(); ++j) {
    if (variances[j] <= 0)
      throw std::invalid_argument("commuting_noise_from_modes: variances must be positive");
    model.modes.push_back({modes[j].u1, variances[j]});
    model.modes.push_back({modes[j].u2, variances[j]});
    model.block_omegas.push_back(modes[j].omega);
  }
  return model;
}

double orthonormality_defect(const NoiseModel& noise, const Mesh& mesh, int quad_degree) {
  const TetRule& rule = tet_rule(quad_degree);
  const int M = noise.n_modes();
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(M, M);
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const double V = mesh.elements[e].volume;
    for (int qp = 0; qp < rule.w.size(); ++qp) {
      Vector3d x = mesh.point(e, rule.bary.col(qp));
      Eigen::MatrixXd vals(6, M);
      for (int m = 0; m < M; ++m) vals.col(m) = noise.modes[m].field.value(x);
      const double wq = V * rule.w[qp];
      for (int i = 0; i < M; ++i)
        for (int j = i; j < M; ++j) {
          double dot = mesh.eps[e] * vals.col(i).head<3>().dot(vals.col(j).head<3>()) +
                       mesh.mu[e] * vals.col(i).tail<3>().dot(vals.col(j).tail<3>());
          G(i, j) += wq * dot;
        }
    }
  }
  double defect = 0;
  for (int i = 0; i < M; ++i)
    for (int j = i; j < M; ++j)
      defect = std::max(defect, std::abs(G(i, j) - (i == j ? 1.0 : 0.0)));
  return defect;
}

NoisePath::NoisePath(double T_, std::int64_t steps_, std::uint64_t seed_,
                     std::int64_t path_index_, std::vector<double> variances)
    : T(T_), steps(steps_), seed(seed_), path_index(path_index_), q(std::move(variances)) {
  W.assign(q.size(), Eigen::VectorXd::Zero(steps + 1));
}

Eigen::VectorXd NoisePath::increments_at(std::int64_t n) const {
  Eigen::VectorXd d(n_modes());
  for (int m = 0; m < n_modes(); ++m) d[m] = increment(m, n);
  return d;
}

NoisePath sample_path(const NoiseModel& noise, double T, std::int64_t steps,
                      std::uint64_t seed, std::int64_t path_index) {
  if (steps < 1) throw std::invalid_argument("sample_path: empty grid");
  if (T <= 0) throw std::invalid_argument("sample_path: T must be positive");
  std::vector<double> q(noise.modes.size());
  for (size_t m = 0; m < q.size(); ++m) q[m] = noise.modes[m].q;
  NoisePath path(T, steps, seed, path_index, std::move(q));
  const double tau = path.dt();
  for (int m = 0; m < path.n_modes(); ++m) {
    const double sd = std::sqrt(tau * path.q[m]);
    double w = 0;
    for (std::int64_t i = 0; i < steps; ++i) {
      w += sd * normal_draw(seed, path_index, /*stream=*/0, m, steps, i);
      path.W[m][i + 1] = w;
    }
  }
  return path;
}

namespace {

// Insert midpoints of every interval: W_mid ~ N((Wa+Wb)/2, tau_fine/2 * q)
// keyed by the refined grid size and the odd index of the new point.
NoisePath halve(const NoisePath& p) {
  NoisePath fine(p.T, 2 * p.steps, p.seed, p.path_index, p.q);
  const double tau_f = fine.dt();
  for (int m = 0; m < p.n_modes(); ++m) {
    for (std::int64_t i = 0; i <= p.steps; ++i) fine.W[m][2 * i] = p.W[m][i];
    const double sd = std::sqrt(0.5 * tau_f * p.q[m]);
    for (std::int64_t i = 0; i < p.steps; ++i) {
      double mid = 0.5 * (p.W[m][i] + p.W[m][i + 1]) +
                   sd * normal_draw(p.seed, p.path_index, /*stream=*/1, m, fine.steps,
                                    2 * i + 1);
      fine.W[m][2 * i + 1] = mid;
    }
  }
  return fine;
}

// General conditional split of each interval into `factor` pieces.
NoisePath split(const NoisePath& p, int factor) {
  NoisePath fine(p.T, factor * p.steps, p.seed, p.path_index, p.q);
  const double tau_f = fine.dt();
  for (int m = 0; m < p.n_modes(); ++m) {
    for (std::int64_t i = 0; i <= p.steps; ++i) fine.W[m][factor * i] = p.W[m][i];
    for (std::int64_t i = 0; i < p.steps; ++i) {
      double cur = p.W[m][i];
      const double end = p.W[m][i + 1];
      for (int s = 1; s < factor; ++s) {
        const int remaining = factor - s + 1;
        const double mean = cur + (end - cur) / remaining;
        const double var = tau_f * p.q[m] * double(remaining - 1) / remaining;
        cur = mean + std::sqrt(var) * normal_draw(p.seed, p.path_index, /*stream=*/2, m,
                                                  fine.steps, factor * i + s);
        fine.W[m][factor * i + s] = cur;
      }
    }
  }
  return fine;
}

}  // namespace

NoisePath refine_path(const NoisePath& path, int factor) {
  if (factor < 2) throw std::invalid_argument("refine_path: factor must be >= 2");
  if (path.steps > (std::int64_t{1} << 40) / factor)
    throw std::invalid_argument("refine_path: grid size overflow");
  if (factor % 2 == 0) {
    NoisePath half = halve(path);
    return factor == 2 ? half : refine_path(half, factor / 2);
  }
  return split(path, factor);
}

NoisePath aggregate_path(const NoisePath& path, int factor) {
  if (factor < 1 || path.steps % factor != 0)
    throw std::invalid_argument("aggregate_path: factor must divide the step count");
  NoisePath coarse(path.T, path.steps / factor, path.seed, path.path_index, path.q);
  for (int m = 0; m < path.n_modes(); ++m)
    for (std::int64_t i = 0; i <= coarse.steps; ++i)
      coarse.W[m][i] = path.W[m][factor * i];
  return coarse;
}

ProjectedNoise project_noise(const NoiseModel& noise, const Mesh& mesh, int quad_degree) {
  ProjectedNoise pn;
  pn.loads.resize(24 * mesh.n_elements(), noise.n_modes());
  for (int m = 0; m < noise.n_modes(); ++m)
    pn.loads.col(m) = load_vector(noise.modes[m].field, mesh, quad_degree);
  return pn;
}

}  // namespace smaxdg
