#ifndef SMAXDG_NOISE_HPP
#define SMAXDG_NOISE_HPP

#include <cstdint>
#include <vector>

#include "smaxdg/analytic_field.hpp"
#include "smaxdg/mesh.hpp"
#include "smaxdg/spectral.hpp"

namespace smaxdg {

struct NoiseMode {
  AnalyticField field;  // orthonormal in <.,.>_V by convention
  double q = 1.0;
};

// Finite-rank spectral model of the Q-Wiener process: W = sum_j sqrt-free
// coefficient processes W_j(t) g_j with Var of increments tau * q_j.
struct NoiseModel {
  std::vector<NoiseMode> modes;
  bool commuting_with_M = false;
  // Set by the commuting construction: modes 2j, 2j+1 span block j.
  std::vector<double> block_omegas;

  int n_modes() const { return static_cast<int>(modes.size()); }
  double trace() const {
    double s = 0;
    for (const auto& m : modes) s += m.q;
    return s;
  }
};

// Q diagonal in the 2x2 eigenblocks of M: each variance is assigned to both
// block members so that Q commutes with M. Requires a constant unit medium.
NoiseModel commuting_noise_from_modes(const std::vector<CavityMode>& modes,
                                      const std::vector<double>& variances,
                                      const MediumSpec& medium);

// Max |<g_i, g_j>_V - delta_ij| by quadrature on the given mesh.
double orthonormality_defect(const NoiseModel& noise, const Mesh& mesh,
                             int quad_degree = 10);

// Cumulative mode coefficients W_j(t_i) on a uniform grid; increments are the
// differences, so aggregating a refined path onto the coarse grid reproduces
// the coarse increments bitwise.
class NoisePath {
 public:
  NoisePath() = default;
  NoisePath(double T, std::int64_t steps, std::uint64_t seed, std::int64_t path_index,
            std::vector<double> variances);

  double T = 0;
  std::int64_t steps = 0;
  std::uint64_t seed = 0;
  std::int64_t path_index = 0;
  std::vector<double> q;
  std::vector<Eigen::VectorXd> W;  // per mode, size steps+1, W[0] = 0

  double dt() const { return T / static_cast<double>(steps); }
  int n_modes() const { return static_cast<int>(q.size()); }
  double increment(int mode, std::int64_t n) const { return W[mode][n + 1] - W[mode][n]; }
  Eigen::VectorXd increments_at(std::int64_t n) const;
};

NoisePath sample_path(const NoiseModel& noise, double T, std::int64_t steps,
                      std::uint64_t seed, std::int64_t path_index);

// Conditional (Brownian bridge) refinement keeping all existing values;
// powers of two reduce to repeated halving so refine(2) twice == refine(4).
NoisePath refine_path(const NoisePath& path, int factor);

// Restriction to every factor-th grid point (exact, bitwise).
NoisePath aggregate_path(const NoisePath& path, int factor);

// Cached load vectors b_m = <g_m, phi_.>_V per mode; the projected increment
// load of step n is loads * increments, and coefficients are mass.solve of it.
struct ProjectedNoise {
  Eigen::MatrixXd loads;  // dim x n_modes
};
ProjectedNoise project_noise(const NoiseModel& noise, const Mesh& mesh,
                             int quad_degree = 10);

}  // namespace smaxdg

#endif
