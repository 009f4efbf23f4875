#include "evident/beta_loss.hpp"

#include <stdexcept>

#include "evident/numerics.hpp"

namespace evident {

namespace {

void check_inputs(const Eigen::MatrixXd& alpha, const Eigen::MatrixXd& beta,
                  const Eigen::MatrixXd& y) {
  if (alpha.rows() != beta.rows() || alpha.cols() != beta.cols() ||
      alpha.rows() != y.rows() || alpha.cols() != y.cols()) {
    throw std::invalid_argument("beta_loss: shape mismatch");
  }
  if ((alpha.array() < 1.0).any() || (beta.array() < 1.0).any()) {
    throw std::domain_error("beta_loss: evidence below 1");
  }
  if (((y.array() != 0.0) && (y.array() != 1.0)).any()) {
    throw std::domain_error("beta_loss: labels must be strictly binary");
  }
}

}  // namespace

LossReport beta_loss(const Eigen::MatrixXd& alpha, const Eigen::MatrixXd& beta,
                     const Eigen::MatrixXd& y, LossReduction reduction) {
  check_inputs(alpha, beta, y);
  const Eigen::Index N = alpha.rows(), K = alpha.cols();

  LossReport report;
  report.per_actor = Eigen::VectorXd::Zero(N);
  for (Eigen::Index j = 0; j < N; ++j) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < K; ++i) {
      const double a = alpha(j, i), b = beta(j, i);
      const double psi_total = digamma(a + b);
      acc += y(j, i) == 1.0 ? psi_total - digamma(a) : psi_total - digamma(b);
    }
    report.per_actor[j] = acc;
  }
  report.total = report.per_actor.sum();
  if (reduction == LossReduction::Mean && N > 0) {
    report.total /= static_cast<double>(N);
  }
  return report;
}

BetaLossGrad beta_loss_grad(const Eigen::MatrixXd& alpha,
                            const Eigen::MatrixXd& beta,
                            const Eigen::MatrixXd& y, LossReduction reduction) {
  check_inputs(alpha, beta, y);
  const Eigen::Index N = alpha.rows(), K = alpha.cols();

  BetaLossGrad g;
  g.d_alpha.resize(N, K);
  g.d_beta.resize(N, K);
  for (Eigen::Index j = 0; j < N; ++j) {
    for (Eigen::Index i = 0; i < K; ++i) {
      const double a = alpha(j, i), b = beta(j, i);
      const double psi1_total = trigamma(a + b);
      g.d_alpha(j, i) = psi1_total - y(j, i) * trigamma(a);
      g.d_beta(j, i) = psi1_total - (1.0 - y(j, i)) * trigamma(b);
    }
  }
  if (reduction == LossReduction::Mean && N > 0) {
    g.d_alpha /= static_cast<double>(N);
    g.d_beta /= static_cast<double>(N);
  }
  return g;
}

double dirichlet_binary_loss(double alpha, double beta, int y) {
  if (y != 0 && y != 1) {
    throw std::domain_error("dirichlet_binary_loss: label must be 0 or 1");
  }
  if (!(alpha >= 1.0) || !(beta >= 1.0)) {
    throw std::domain_error("dirichlet_binary_loss: evidence below 1");
  }
  // sum_i y_i (psi(S) - psi(a_i)) with a = (alpha, beta), y one-hot (y, 1-y)
  const double S = alpha + beta;
  const double y1 = static_cast<double>(y);
  return y1 * (digamma(S) - digamma(alpha)) +
         (1.0 - y1) * (digamma(S) - digamma(beta));
}

}  // namespace evident
