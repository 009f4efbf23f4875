#include "evident/hsic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace evident {

namespace {

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& data) {
  const Eigen::VectorXd sq = data.rowwise().squaredNorm();
  Eigen::MatrixXd d2 = sq.replicate(1, data.rows()) +
                       sq.transpose().replicate(data.rows(), 1) -
                       2.0 * data * data.transpose();
  return d2.cwiseMax(0.0);
}

void check_pair(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& X) {
  if (Z.rows() != X.rows()) throw std::invalid_argument("hsic: row-count mismatch");
  if (Z.rows() < 2) throw std::invalid_argument("hsic: need n >= 2");
}

// H K H for H = I - (1/n) 1 1^T, applied without forming H.
Eigen::MatrixXd center_gram(const Eigen::MatrixXd& K) {
  const Eigen::Index n = K.rows();
  const Eigen::VectorXd row_mean = K.rowwise().mean();
  const double total_mean = row_mean.mean();
  Eigen::MatrixXd C = K;
  C.colwise() -= row_mean;
  C.rowwise() -= row_mean.transpose();
  C.array() += total_mean;
  return C;
}

}  // namespace

double median_bandwidth(const Eigen::MatrixXd& data) {
  const Eigen::Index n = data.rows();
  if (n < 2) throw std::invalid_argument("median_bandwidth: need n >= 2");
  const Eigen::MatrixXd d2 = squared_distances(data);
  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = std::sqrt(d2(i, j));
      if (d > 0.0) dists.push_back(d);
    }
  }
  if (dists.empty()) return 1.0;
  std::sort(dists.begin(), dists.end());
  const std::size_t m = dists.size();
  if (m % 2 == 1) return dists[m / 2];
  return 0.5 * (dists[m / 2 - 1] + dists[m / 2]);
}

Eigen::MatrixXd rbf_gram(const Eigen::MatrixXd& data, double bandwidth) {
  if (!(bandwidth > 0.0)) throw std::invalid_argument("rbf_gram: bandwidth must be > 0");
  const Eigen::MatrixXd d2 = squared_distances(data);
  return (-d2 / (2.0 * bandwidth * bandwidth)).array().exp();
}

double hsic_fixed(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& X,
                  double bw_z, double bw_x) {
  check_pair(Z, X);
  const Eigen::Index n = Z.rows();
  // centering both sides keeps the estimate exactly zero whenever either
  // input is constant (its centered Gram vanishes entrywise)
  const Eigen::MatrixXd Kc = center_gram(rbf_gram(Z, bw_z));
  const Eigen::MatrixXd Lc = center_gram(rbf_gram(X, bw_x));
  const double denom = static_cast<double>(n - 1) * static_cast<double>(n - 1);
  const double value = (Kc.array() * Lc.array()).sum() / denom;
  return std::max(value, 0.0);
}

double hsic(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& X) {
  check_pair(Z, X);
  return hsic_fixed(Z, X, median_bandwidth(Z), median_bandwidth(X));
}

Eigen::MatrixXd hsic_grad_fixed(const Eigen::MatrixXd& Z,
                                const Eigen::MatrixXd& X, double bw_z,
                                double bw_x) {
  check_pair(Z, X);
  const Eigen::Index n = Z.rows();
  const Eigen::MatrixXd K = rbf_gram(Z, bw_z);
  const Eigen::MatrixXd L = rbf_gram(X, bw_x);
  const Eigen::MatrixXd M = center_gram(L);
  // d/dZ of sum_ij K_ij M_ij with K_ij = exp(-|z_i-z_j|^2 / (2 s^2)):
  // grad_r = (-2 / ((n-1)^2 s^2)) * sum_j W_rj (z_r - z_j),  W = K .* M
  // summed pairwise so equal rows contribute exact zeros
  const Eigen::MatrixXd W = K.cwiseProduct(M);
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(n, Z.cols());
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index j = 0; j < n; ++j) {
      grad.row(r) += W(r, j) * (Z.row(r) - Z.row(j));
    }
  }
  const double denom = static_cast<double>(n - 1) * static_cast<double>(n - 1);
  grad *= -2.0 / (denom * bw_z * bw_z);
  return grad;
}

Eigen::MatrixXd hsic_grad(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& X) {
  check_pair(Z, X);
  return hsic_grad_fixed(Z, X, median_bandwidth(Z), median_bandwidth(X));
}

std::vector<double> hsic_permutation_null(const Eigen::MatrixXd& Z,
                                          const Eigen::MatrixXd& X,
                                          int n_permutations,
                                          RandomStream& rng) {
  check_pair(Z, X);
  const Eigen::Index n = Z.rows();
  const Eigen::MatrixXd Kc = center_gram(rbf_gram(Z, median_bandwidth(Z)));
  const Eigen::MatrixXd L = rbf_gram(X, median_bandwidth(X));
  const double denom = static_cast<double>(n - 1) * static_cast<double>(n - 1);

  std::vector<std::size_t> perm(static_cast<std::size_t>(n));
  std::vector<double> null_values;
  null_values.reserve(static_cast<std::size_t>(n_permutations));
  for (int t = 0; t < n_permutations; ++t) {
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        acc += Kc(i, j) * L(perm[static_cast<std::size_t>(i)],
                            perm[static_cast<std::size_t>(j)]);
      }
    }
    null_values.push_back(std::max(acc / denom, 0.0));
  }
  return null_values;
}

}  // namespace evident
