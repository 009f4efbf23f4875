#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace evident {

using Vector = Eigen::VectorXd;

// Value + gradient pair for an objective or constraint term.
struct Objective {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
};

// Regularized Lagrangian L(theta, lambda) = loss + lambda*(g - gamma) - (delta/2) lambda^2.
double lagrangian(const Vector& theta, double lambda, const Objective& loss,
                  const Objective& constraint, double gamma, double delta);

// Gradient of the Lagrangian in theta: grad(loss) + lambda * grad(g).
Vector lagrangian_grad(const Vector& theta, double lambda, const Objective& loss,
                       const Objective& constraint);

enum class PrimalMode { Adam, Exact };

// ProperMean: average of all iterates produced so far (matches the
// convergence analysis; default). LaggedSum: sum of the first m-1 iterates
// divided by m (the alternative indexing; yields 0 at m = 1).
enum class AveragingMode { ProperMean, LaggedSum };

// ResetToAverage: after averaging, the working iterate becomes the average
// (Adam moments preserved). NoReset: the working iterate keeps the raw step.
enum class ResetMode { ResetToAverage, NoReset };

struct PrimalState {
  Vector theta;                         // working iterate
  Vector average;                       // running average of produced iterates
  Vector lagged_average;                // LaggedSum variant of the average
  std::vector<Vector> history;          // produced iterates (when kept)
  bool keep_history = true;
  Vector iterate_sum;                   // incremental sum for O(1) averaging
  Vector adam_m, adam_v;
  int step_count = 0;                   // iterates produced so far
  int adam_t = 0;

  explicit PrimalState(const Vector& theta0, bool keep_history_ = true);
};

struct DualState {
  double lambda = 0.0;
  double eta2 = 0.01;
  double delta = 0.01;
  double gamma = 0.0;
};

struct Alg1Options {
  double eta1 = 1e-3;
  PrimalMode primal_mode = PrimalMode::Adam;
  AveragingMode averaging = AveragingMode::ProperMean;
  ResetMode reset = ResetMode::ResetToAverage;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  // argmin_theta L(theta, lambda); required for PrimalMode::Exact.
  std::function<Vector(double)> exact_argmin;
};

// One primal-dual iteration:
//   1. primal step on the Lagrangian at the current (theta, lambda)
//   2. append the new iterate, refresh the running average
//   3. optionally reset theta to the average
//   4. dual ascent at the average: lambda <- max(lambda + eta2*(g(avg) - gamma - delta*lambda), 0)
// Throws std::runtime_error if the loss or constraint turns non-finite.
void algorithm1_step(PrimalState& primal, DualState& dual,
                     const Objective& loss, const Objective& constraint,
                     const Alg1Options& options);

// Convenience overload: default options with the given primal rate.
void algorithm1_step(PrimalState& primal, DualState& dual,
                     const Objective& loss, const Objective& constraint,
                     double eta1);

// A convex test problem with known optimum for certificate checking.
// Constraint g must be >= 0 everywhere with infimum 0.
struct ConvexProblem {
  std::string name;
  Objective loss;
  Objective constraint;
  double f_star = 0.0;       // optimal constrained objective value
  double lambda_star = 0.0;  // optimal multiplier
  double G = 1.0;            // iterate/average norm bound
  double L_bound = 1.0;      // constraint magnitude bound, |g| < L on iterates
  std::function<Vector(double)> exact_argmin;
  Vector theta0;
};

struct RunConfig {
  double eta1 = 1e-3;
  double eta2 = 0.01;
  double delta = 0.01;
  double gamma = 0.0;
  double lambda0 = 0.0;
  int max_steps = 1000;
  PrimalMode primal_mode = PrimalMode::Adam;
  AveragingMode averaging = AveragingMode::ProperMean;
  ResetMode reset = ResetMode::ResetToAverage;
};

struct TraceRow {
  int step = 0;          // m; row 0 is the initial state
  Vector iterate;        // iterate produced at this step (initial theta at m=0)
  Vector average;        // running average after this step
  double lambda = 0.0;   // dual value after this step
  double loss_avg = 0.0;        // loss at the average
  double constraint_avg = 0.0;  // g at the average
};

struct TraceReport {
  std::vector<TraceRow> rows;
  double eta2 = 0.0;
  double lambda0 = 0.0;
  double gamma = 0.0;
  double delta = 0.0;
};

// Runs algorithm1_step max_steps times; deterministic. Aborts with
// std::runtime_error if |theta| exceeds 1e6 * max(1, |theta0|).
TraceReport run_constrained(const ConvexProblem& problem, const RunConfig& config);

// Averaged-sequence certificate: the recurrence
//   avg^(m+1) - avg^(m) = (iterate^(m+1) - avg^(m)) / (m+1)
// must hold to tol, and |avg^(m+1) - avg^(m)| <= 2G/(m+1).
struct Prop1Report {
  bool ok = true;
  double max_recurrence_residual = 0.0;
  double max_bound_slack = 0.0;  // max over steps of |diff| - 2G/(m+1) (<= 0 when ok)
  int first_violation_step = -1;
  std::string message;
};

Prop1Report check_prop1(const TraceReport& trace, double G, double tol = 1e-12);

// Per-step certificates for the averaged primal-dual scheme (exact primal):
//   (1) [g(avg_m)]+ <= lambda_m / (m * eta2)
//   (2) loss(avg_m) <= f* + lambda0^2/(2 m eta2) + eta2 L^2 / 2
//   (3) loss(avg_m) >= f* - lambda* [g(avg_m)]+
struct Prop2Report {
  bool ok = true;
  int first_violation_step = -1;
  int violated_bound = 0;  // 1, 2 or 3
  double lhs = 0.0, rhs = 0.0;
  double final_constraint = 0.0;   // g(avg) at the last step
  double final_bound1_rhs = 0.0;   // lambda_m / (m eta2) at the last step
  std::string message;
};

Prop2Report check_prop2_bounds(const TraceReport& trace, const ConvexProblem& problem);

// Trace export, one row per step:
// step,loss_avg,constraint_avg,lambda,bound1_lhs,bound1_rhs,bound2_rhs,bound3_rhs
// A nonempty comment is written first as '#'-prefixed lines (config echo).
void write_trace_csv(const std::string& path, const TraceReport& trace,
                     const ConvexProblem& problem,
                     const std::string& comment = "");

// Built-in certification suite: three convex problems with analytic optima
// and a tuned run configuration each.
struct SuiteEntry {
  ConvexProblem problem;
  RunConfig config;
};

std::vector<SuiteEntry> builtin_certification_suite();

}  // namespace evident
