#ifndef SMAXDG_QUADRATURE_HPP
#define SMAXDG_QUADRATURE_HPP

#include <Eigen/Core>

namespace smaxdg {

// Quadrature nodes in barycentric coordinates with weights normalized to 1,
// so that integral over a cell = measure(cell) * sum_i w_i f(x_i).
struct TetRule {
  Eigen::Matrix<double, 4, Eigen::Dynamic> bary;
  Eigen::VectorXd w;
};

struct TriRule {
  Eigen::Matrix<double, 3, Eigen::Dynamic> bary;
  Eigen::VectorXd w;
};

// Rules exact for polynomials up to the given total degree (collapsed
// Gauss-Legendre products; cached per degree).
const TetRule& tet_rule(int degree);
const TriRule& tri_rule(int degree);

// Gauss-Legendre nodes and weights on [0,1], weights summing to 1.
void gauss_legendre_01(int m, Eigen::VectorXd& nodes, Eigen::VectorXd& weights);

}  // namespace smaxdg

#endif
