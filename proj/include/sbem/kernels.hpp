#pragma once

#include <Eigen/Dense>

#include <array>
#include <stdexcept>

namespace sbem {

struct SingularityError : std::domain_error {
  using std::domain_error::domain_error;
};

template <typename Scalar>
struct KernelEval {
  using M3 = Eigen::Matrix<Scalar, 3, 3>;
  using V3 = Eigen::Matrix<Scalar, 3, 1>;
  M3 G;
  std::array<M3, 3> T;  // T[k](i, j) = T_ijk
  V3 P;
  M3 Pi;
};

enum KernelSet : unsigned { kG = 1, kT = 2, kP = 4, kPi = 8, kAll = 15 };

// r = x - y
template <typename Scalar>
KernelEval<Scalar> eval_kernels(const Eigen::Matrix<Scalar, 3, 1>& r, unsigned which = kAll) {
  using M3 = Eigen::Matrix<Scalar, 3, 3>;
  const Scalar d = r.norm();
  if (!(d > 0)) throw SingularityError("kernel evaluated at r = 0");
  const Eigen::Matrix<Scalar, 3, 1> rb = r / d;
  const M3 rr = rb * rb.transpose();
  KernelEval<Scalar> k;
  if (which & kG) k.G = (M3::Identity() + rr) / d;
  if (which & kT)
    for (int c = 0; c < 3; ++c) k.T[c] = (-6 * rb(c) / (d * d)) * rr;
  if (which & kP) k.P = 2 * rb / (d * d);
  if (which & kPi) k.Pi = (4 / (d * d * d)) * (3 * rr - M3::Identity());
  return k;
}

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> stokeslet(const Eigen::Matrix<Scalar, 3, 1>& r) {
  const Scalar d = r.norm();
  if (!(d > 0)) throw SingularityError("kernel evaluated at r = 0");
  return (Eigen::Matrix<Scalar, 3, 3>::Identity() + r * r.transpose() / (d * d)) / d;
}

// (T n)_ij = T_ijk n_k
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> tn_contraction(const Eigen::Matrix<Scalar, 3, 1>& r, const Eigen::Matrix<Scalar, 3, 1>& n) {
  const Scalar d = r.norm();
  if (!(d > 0)) throw SingularityError("kernel evaluated at r = 0");
  const Eigen::Matrix<Scalar, 3, 1> rb = r / d;
  return (-6 * rb.dot(n) / (d * d)) * (rb * rb.transpose());
}

}  // namespace sbem
