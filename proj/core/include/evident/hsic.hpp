#pragma once

#include <vector>

#include <Eigen/Core>

#include "evident/random.hpp"

namespace evident {

// Median of nonzero pairwise Euclidean distances between rows.
// Falls back to 1.0 when all pairwise distances are zero. Requires n >= 2.
double median_bandwidth(const Eigen::MatrixXd& data);

// RBF Gram matrix k(x,y) = exp(-|x-y|^2 / (2 sigma^2)) over rows.
Eigen::MatrixXd rbf_gram(const Eigen::MatrixXd& data, double bandwidth);

// Biased HSIC estimate tr(K H L H) / (n-1)^2 with median-heuristic
// bandwidths on both sides (clamped to >= 0). Rows must match, n >= 2.
double hsic(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& X);

// Same estimator with caller-supplied bandwidths (used when bandwidths
// must be held fixed, e.g. inside a training step).
double hsic_fixed(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& X,
                  double bw_z, double bw_x);

// Analytic d(HSIC)/dZ with both bandwidths treated as constants
// (stop-gradient through the median heuristic).
Eigen::MatrixXd hsic_grad(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& X);

Eigen::MatrixXd hsic_grad_fixed(const Eigen::MatrixXd& Z,
                                const Eigen::MatrixXd& X, double bw_z,
                                double bw_x);

// Null distribution of the estimator under random row permutations of X,
// reusing the centered Gram of Z across permutations. Used by dependence
// tests; entry order matches the permutation draw order.
std::vector<double> hsic_permutation_null(const Eigen::MatrixXd& Z,
                                          const Eigen::MatrixXd& X,
                                          int n_permutations,
                                          RandomStream& rng);

}  // namespace evident
