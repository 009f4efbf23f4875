#pragma once

#include <Eigen/Core>

namespace evident {

// Evidential Beta negative-log-likelihood over a batch.
// Row j (one sample), class i:
//   y=1 term: psi(a+b) - psi(a)    y=0 term: psi(a+b) - psi(b)
// Every term is nonnegative (psi is increasing).
struct LossReport {
  double total;                // sum of per_actor (default reduction)
  Eigen::VectorXd per_actor;  // one entry per batch row
};

enum class LossReduction { Sum, Mean };

// alpha, beta: N x K matrices with entries >= 1; y: N x K strictly binary.
LossReport beta_loss(const Eigen::MatrixXd& alpha, const Eigen::MatrixXd& beta,
                     const Eigen::MatrixXd& y,
                     LossReduction reduction = LossReduction::Sum);

struct BetaLossGrad {
  Eigen::MatrixXd d_alpha;  // psi'(a+b) - y * psi'(a)
  Eigen::MatrixXd d_beta;   // psi'(a+b) - (1-y) * psi'(b)
};

BetaLossGrad beta_loss_grad(const Eigen::MatrixXd& alpha,
                            const Eigen::MatrixXd& beta,
                            const Eigen::MatrixXd& y,
                            LossReduction reduction = LossReduction::Sum);

// Two-class Dirichlet evidential loss with one-hot labels (y, 1-y) and
// concentration (alpha, beta). Used as an independent oracle: for a single
// class this equals beta_loss on the same inputs.
double dirichlet_binary_loss(double alpha, double beta, int y);

}  // namespace evident
