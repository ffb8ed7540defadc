#include "smaxdg/ldp.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace smaxdg {

namespace {

RateValue spectral_rate(const SpectralField& v, const SpectralField& drift,
                        const std::vector<double>& omegas, const std::vector<double>& q,
                        double T, double range_tol,
                        const std::vector<double>& amplification2) {
  if (v.blocks() != drift.blocks() || v.blocks() != static_cast<int>(q.size()) ||
      v.blocks() != static_cast<int>(omegas.size()))
    throw std::invalid_argument("rate: block mismatch");
  double total2 = 0, outside2 = 0, val = 0;
  for (int j = 0; j < v.blocks(); ++j) {
    const double da = v.a[j] - drift.a[j];
    const double db = v.b[j] - drift.b[j];
    const double d2 = da * da + db * db;
    total2 += d2;
    if (q[j] > 0)
      val += amplification2[j] * d2 / q[j];
    else
      outside2 += d2;
  }
  if (outside2 > range_tol * range_tol * std::max(total2, 1e-300) && outside2 > 0)
    return RateValue::infinite();
  return {true, val / (2.0 * T)};
}

}  // namespace

RateValue rate_exact(const SpectralField& v, const SpectralField& u0,
                     const std::vector<double>& omegas, const std::vector<double>& q,
                     double T, double range_tol) {
  SpectralField drift(u0.blocks());
  for (int j = 0; j < u0.blocks(); ++j) {
    Eigen::Vector2d d = rotation(omegas[j] * T) * Eigen::Vector2d(u0.a[j], u0.b[j]);
    drift.a[j] = d[0];
    drift.b[j] = d[1];
  }
  std::vector<double> amp(q.size(), 1.0);
  return spectral_rate(v, drift, omegas, q, T, range_tol, amp);
}

RateValue rate_temporal(const SpectralField& v, const SpectralField& u0,
                        const std::vector<double>& omegas, const std::vector<double>& q,
                        double T, std::int64_t N, double range_tol) {
  const double tau = T / static_cast<double>(N);
  SpectralField drift(u0.blocks());
  std::vector<double> amp(q.size(), 1.0);
  for (int j = 0; j < u0.blocks(); ++j) {
    Eigen::Vector2d d = rotation(static_cast<double>(N) * midpoint_angle(tau, omegas[j])) *
                        Eigen::Vector2d(u0.a[j], u0.b[j]);
    drift.a[j] = d[0];
    drift.b[j] = d[1];
    const double c = 0.5 * tau * omegas[j];
    amp[j] = 1.0 + c * c;  // |T_tau^{-1} x|^2 = (1 + c^2) |x|^2
  }
  return spectral_rate(v, drift, omegas, q, T, range_tol, amp);
}

FullRate rate_full(const Eigen::VectorXd& v, const Eigen::VectorXd& u0_coeffs,
                   const ImplicitMidpoint& stepper, const ProjectedNoise& noise,
                   const std::vector<double>& q, double T, std::int64_t N,
                   double rank_tol) {
  const DiscreteMaxwellOperator& op = stepper.op();
  if (op.dim() > 4000) throw std::invalid_argument("rate_full: dimension guard exceeded");
  const int M = static_cast<int>(q.size());
  if (noise.loads.cols() != M) throw std::invalid_argument("rate_full: mode count mismatch");
  const double tau = T / static_cast<double>(N);
  if (std::abs(tau - stepper.tau()) > 1e-12 * tau)
    throw std::invalid_argument("rate_full: stepper tau does not match T/N");

  // Drift S_{h,tau}^N u0 and the propagated scaled modes sqrt(tau q_m) w_{j,m}.
  Eigen::VectorXd drift = u0_coeffs;
  for (std::int64_t n = 0; n < N; ++n) drift = stepper.apply_S(drift);
  Eigen::VectorXd d = v - drift;

  const int r = static_cast<int>(N) * M;
  Eigen::MatrixXd cols(op.dim(), r);
  for (int m = 0; m < M; ++m) {
    Eigen::VectorXd w = stepper.apply_T(op.mass().solve(noise.loads.col(m)));
    const double scale = std::sqrt(tau * q[m]);
    cols.col(m) = scale * w;  // j = N (no S applications)
    for (std::int64_t j = 1; j < N; ++j) {
      w = stepper.apply_S(w);
      cols.col(static_cast<int>(j) * M + m) = scale * w;
    }
  }

  // Gram and projections in the V inner product.
  Eigen::MatrixXd Across(op.dim(), r);
  for (int c = 0; c < r; ++c) Across.col(c) = op.mass().apply(cols.col(c));
  Eigen::MatrixXd G = cols.transpose() * Across;
  Eigen::VectorXd beta = Across.transpose() * d;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (G + G.transpose()));
  const Eigen::VectorXd lam = es.eigenvalues();
  const double sigma_max = std::sqrt(std::max(0.0, lam.maxCoeff()));
  const double cutoff = rank_tol * sigma_max;

  FullRate out;
  double val = 0;
  Eigen::VectorXd z = Eigen::VectorXd::Zero(r);
  for (int i = 0; i < r; ++i) {
    const double sigma = std::sqrt(std::max(0.0, lam[i]));
    if (sigma <= cutoff) continue;
    ++out.effective_rank;
    const double proj = es.eigenvectors().col(i).dot(beta);
    val += proj * proj / (lam[i] * lam[i]);
    z += (proj / lam[i]) * es.eigenvectors().col(i);
  }

  // Range check: the projection cols * G^+ beta must reproduce d.
  Eigen::VectorXd resid = d - cols * z;
  const double dnorm = std::sqrt(std::max(d.dot(op.mass().apply(d)), 0.0));
  const double rnorm = std::sqrt(std::max(resid.dot(op.mass().apply(resid)), 0.0));
  out.range_residual = dnorm > 0 ? rnorm / dnorm : 0.0;
  if (dnorm > 0 && rnorm > 1e-6 * dnorm) {
    out.rate = RateValue::infinite();
    return out;
  }
  out.rate = {true, 0.5 * val};
  return out;
}

}  // namespace smaxdg
