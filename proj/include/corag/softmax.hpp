// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>

#include <Eigen/Dense>

namespace corag {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using VectorXd = Vector<double>;
using MatrixXd = Matrix<double>;

/// log(sum(exp(x))) with the max shifted out.
template <typename Derived>
typename Derived::Scalar log_sum_exp(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  const Scalar m = x.maxCoeff();
  return m + std::log((x.array() - m).exp().sum());
}

template <typename Derived>
Vector<typename Derived::Scalar> log_softmax(const Eigen::MatrixBase<Derived>& x) {
  return (x.array() - log_sum_exp(x)).matrix();
}

template <typename Derived>
Vector<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  Vector<Scalar> e = (x.array() - x.maxCoeff()).exp().matrix();
  return e / e.sum();
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& x) {
  return x.allFinite();
}

/// Gradient of sum_i w_i * log softmax(X theta)_i with respect to theta, given
/// the feature rows X and probabilities p = softmax(X theta).
template <typename DX, typename DP, typename DW>
Vector<typename DX::Scalar> weighted_log_softmax_grad(
    const Eigen::MatrixBase<DX>& features, const Eigen::MatrixBase<DP>& probs,
    const Eigen::MatrixBase<DW>& weights) {
  // d/dtheta log p_i = x_i - sum_j p_j x_j
  const Vector<typename DX::Scalar> mean_feature = features.transpose() * probs;
  return features.transpose() * weights - weights.sum() * mean_feature;
}

}  // namespace corag
