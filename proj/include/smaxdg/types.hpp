#ifndef SMAXDG_TYPES_HPP
#define SMAXDG_TYPES_HPP

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace smaxdg {

using Vector3d = Eigen::Vector3d;
using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix3d = Eigen::Matrix3d;
using Matrix6x3d = Eigen::Matrix<double, 6, 3>;
using SparseMatrix = Eigen::SparseMatrix<double>;

// Cross-product matrix: skew(n) * a == n x a.
inline Matrix3d skew(const Vector3d& n) {
  Matrix3d s;
  s << 0, -n.z(), n.y(), n.z(), 0, -n.x(), -n.y(), n.x(), 0;
  return s;
}

// Projection onto the plane orthogonal to the unit vector n,
// so a . tangential(n) . b == (n x a) . (n x b).
inline Matrix3d tangential(const Vector3d& n) {
  return Matrix3d::Identity() - n * n.transpose();
}

inline constexpr const char* kCodeVersion = "smaxdg 0.1.0";

}  // namespace smaxdg

#endif
