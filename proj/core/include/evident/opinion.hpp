#pragma once

#include <Eigen/Core>

namespace evident {

// Binomial opinion (b, d, u, a) with prior weight W.
// With prior weight W and base rate a:
//   b = (alpha - a*W) / (alpha + beta)
//   d = (beta  - a*W) / (alpha + beta)
//   u = W / (alpha + beta)
//   p = b + a*u   (equals the Beta mean alpha/(alpha+beta) when W matches
//                  the evidence offset; additivity b+d+u = 1 requires a = 1/2)
struct Opinion {
  double b;
  double d;
  double u;
  double a;
  double W;

  double expected_probability() const { return b + a * u; }
};

// Per-sample positive/negative evidence over K classes; entries >= 1.
struct EvidencePair {
  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;

  int K() const { return static_cast<int>(alpha.size()); }
};

// All four novelty mechanisms, oriented so higher = more novel.
// belief stores 1 - (combined belief) for that reason.
struct NoveltyScores {
  double pe;
  double ne;
  double pne;
  double belief;
};

constexpr double kDefaultPriorWeight = 2.0;
constexpr double kDefaultBaseRate = 1.0;

Opinion opinion_from_evidence(double alpha, double beta,
                              double W = kDefaultPriorWeight,
                              double a = kDefaultBaseRate);

// Binomial co-multiplication b1 + b2 - b1*b2; both operands in [0,1].
double comultiply(double b1, double b2);

NoveltyScores novelty_scores(const EvidencePair& ev,
                             double W = kDefaultPriorWeight,
                             double a = kDefaultBaseRate);

}  // namespace evident
