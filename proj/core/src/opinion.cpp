#include "evident/opinion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "evident/numerics.hpp"

namespace evident {

Opinion opinion_from_evidence(double alpha, double beta, double W, double a) {
  if (!(alpha >= 1.0) || !(beta >= 1.0)) {
    throw std::domain_error("opinion_from_evidence: evidence must be >= 1");
  }
  if (!(W > 0.0)) throw std::domain_error("opinion_from_evidence: W must be > 0");
  const double total = alpha + beta;
  Opinion op;
  op.b = (alpha - a * W) / total;
  op.d = (beta - a * W) / total;
  op.u = W / total;
  op.a = a;
  op.W = W;
  return op;
}

double comultiply(double b1, double b2) {
  if (b1 < 0.0 || b1 > 1.0 || b2 < 0.0 || b2 > 1.0) {
    throw std::domain_error("comultiply: operands must lie in [0,1]");
  }
  if (b1 == 1.0 || b2 == 1.0) return 1.0;  // absorbing, kept exact
  return std::min(b1 + b2 - b1 * b2, 1.0);
}

NoveltyScores novelty_scores(const EvidencePair& ev, double W, double a) {
  const int K = ev.K();
  if (K == 0 || ev.beta.size() != K) {
    throw std::invalid_argument("novelty_scores: bad evidence shape");
  }
  const double sum_alpha = ev.alpha.sum();
  const double sum_beta = ev.beta.sum();

  NoveltyScores s;
  s.pe = 2.0 * stable_logistic(sum_alpha - static_cast<double>(K));
  s.ne = 2.0 * stable_logistic(static_cast<double>(K) - sum_beta) - 1.0;
  s.pne = 2.0 * static_cast<double>(K) / (sum_alpha + sum_beta);

  double combined = 0.0;  // comultiplication identity element
  for (int i = 0; i < K; ++i) {
    const Opinion op = opinion_from_evidence(ev.alpha[i], ev.beta[i], W, a);
    const double bi = std::clamp(op.b, 0.0, 1.0);
    combined = comultiply(combined, bi);
  }
  s.belief = 1.0 - combined;
  return s;
}

}  // namespace evident
