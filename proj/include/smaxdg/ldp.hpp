#ifndef SMAXDG_LDP_HPP
#define SMAXDG_LDP_HPP

#include <vector>

#include "smaxdg/spectral.hpp"
#include "smaxdg/timestepper.hpp"

namespace smaxdg {

// Rate functional value; infinite outside the covariance range (dedicated
// sentinel, never a floating overflow).
struct RateValue {
  bool finite = true;
  double value = 0;

  static RateValue infinite() { return {false, 0}; }
};

// Commuting-noise closed form: I(v) = 1/(2T) sum_j |v_j - drift_j|^2 / q_j
// with drift = rotation(omega T) u0. q_j = 0 marks a block outside the noise
// span; any displacement there (beyond range_tol relative) gives +infinity.
RateValue rate_exact(const SpectralField& v, const SpectralField& u0,
                     const std::vector<double>& omegas, const std::vector<double>& q,
                     double T, double range_tol = 1e-10);

// Temporal-scheme rate: drift = S_tau^N u0 and T_tau^{-1} amplifies each
// block by (1 + (tau omega / 2)^2)^{1/2}.
RateValue rate_temporal(const SpectralField& v, const SpectralField& u0,
                        const std::vector<double>& omegas, const std::vector<double>& q,
                        double T, std::int64_t N, double range_tol = 1e-10);

struct FullRate {
  RateValue rate;
  int effective_rank = 0;
  double range_residual = 0;  // relative residual of v - drift against the span
};

// Fully discrete rate via the Gram matrix of the propagated noise modes
// S_{h,tau}^{N-j} T_{h,tau} pi_h g_m (rank N * n_modes); pseudo-inverse with
// the given relative singular-value cutoff. Guarded to dim <= 4000.
FullRate rate_full(const Eigen::VectorXd& v, const Eigen::VectorXd& u0_coeffs,
                   const ImplicitMidpoint& stepper, const ProjectedNoise& noise,
                   const std::vector<double>& q, double T, std::int64_t N,
                   double rank_tol = 1e-10);

}  // namespace smaxdg

#endif
