#include "evident/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace evident {

namespace {
constexpr double kCertSlack = 1e-9;  // float slack on certificate comparisons

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw std::runtime_error(std::string("algorithm1_step: non-finite ") + what);
  }
}
}  // namespace

double lagrangian(const Vector& theta, double lambda, const Objective& loss,
                  const Objective& constraint, double gamma, double delta) {
  return loss.value(theta) + lambda * (constraint.value(theta) - gamma) -
         0.5 * delta * lambda * lambda;
}

Vector lagrangian_grad(const Vector& theta, double lambda, const Objective& loss,
                       const Objective& constraint) {
  return loss.gradient(theta) + lambda * constraint.gradient(theta);
}

PrimalState::PrimalState(const Vector& theta0, bool keep_history_)
    : theta(theta0),
      average(theta0),
      lagged_average(Vector::Zero(theta0.size())),
      keep_history(keep_history_),
      iterate_sum(Vector::Zero(theta0.size())),
      adam_m(Vector::Zero(theta0.size())),
      adam_v(Vector::Zero(theta0.size())) {}

void algorithm1_step(PrimalState& primal, DualState& dual,
                     const Objective& loss, const Objective& constraint,
                     const Alg1Options& options) {
  Vector iterate;
  if (options.primal_mode == PrimalMode::Exact) {
    if (!options.exact_argmin) {
      throw std::invalid_argument("algorithm1_step: exact mode requires exact_argmin");
    }
    iterate = options.exact_argmin(dual.lambda);
  } else {
    Vector grad = lagrangian_grad(primal.theta, dual.lambda, loss, constraint);
    if (!grad.allFinite()) {
      throw std::runtime_error("algorithm1_step: non-finite Lagrangian gradient");
    }
    primal.adam_t += 1;
    primal.adam_m = options.adam_beta1 * primal.adam_m + (1.0 - options.adam_beta1) * grad;
    primal.adam_v = options.adam_beta2 * primal.adam_v +
                    (1.0 - options.adam_beta2) * grad.cwiseProduct(grad);
    const double bc1 = 1.0 - std::pow(options.adam_beta1, primal.adam_t);
    const double bc2 = 1.0 - std::pow(options.adam_beta2, primal.adam_t);
    const Vector m_hat = primal.adam_m / bc1;
    const Vector v_hat = primal.adam_v / bc2;
    iterate = primal.theta -
              options.eta1 *
                  (m_hat.array() / (v_hat.array().sqrt() + options.adam_eps))
                      .matrix();
  }

  require_finite(loss.value(iterate), "loss at new iterate");
  require_finite(constraint.value(iterate), "constraint at new iterate");

  primal.step_count += 1;
  primal.iterate_sum += iterate;
  if (primal.keep_history) primal.history.push_back(iterate);

  // running mean via the averaging recurrence (exact for the analysis check)
  primal.average += (iterate - primal.average) / static_cast<double>(primal.step_count);
  primal.lagged_average =
      (primal.iterate_sum - iterate) / static_cast<double>(primal.step_count);

  const Vector& avg = options.averaging == AveragingMode::ProperMean
                          ? primal.average
                          : primal.lagged_average;
  primal.theta = options.reset == ResetMode::ResetToAverage ? avg : iterate;

  const double g_avg = constraint.value(avg);
  require_finite(g_avg, "constraint at average");
  dual.lambda = std::max(
      dual.lambda + dual.eta2 * (g_avg - dual.gamma - dual.delta * dual.lambda), 0.0);
}

void algorithm1_step(PrimalState& primal, DualState& dual,
                     const Objective& loss, const Objective& constraint,
                     double eta1) {
  Alg1Options options;
  options.eta1 = eta1;
  algorithm1_step(primal, dual, loss, constraint, options);
}

TraceReport run_constrained(const ConvexProblem& problem, const RunConfig& config) {
  PrimalState primal(problem.theta0, /*keep_history=*/true);
  DualState dual;
  dual.lambda = config.lambda0;
  dual.eta2 = config.eta2;
  dual.delta = config.delta;
  dual.gamma = config.gamma;

  Alg1Options options;
  options.eta1 = config.eta1;
  options.primal_mode = config.primal_mode;
  options.averaging = config.averaging;
  options.reset = config.reset;
  options.exact_argmin = problem.exact_argmin;

  TraceReport trace;
  trace.eta2 = config.eta2;
  trace.lambda0 = config.lambda0;
  trace.gamma = config.gamma;
  trace.delta = config.delta;

  const double diverge_scale = 1e6 * std::max(1.0, problem.theta0.norm());

  TraceRow row0;
  row0.step = 0;
  row0.iterate = problem.theta0;
  row0.average = problem.theta0;
  row0.lambda = config.lambda0;
  row0.loss_avg = problem.loss.value(problem.theta0);
  row0.constraint_avg = problem.constraint.value(problem.theta0);
  trace.rows.push_back(row0);

  for (int m = 1; m <= config.max_steps; ++m) {
    algorithm1_step(primal, dual, problem.loss, problem.constraint, options);
    const Vector& avg = config.averaging == AveragingMode::ProperMean
                            ? primal.average
                            : primal.lagged_average;
    if (primal.theta.norm() > diverge_scale || avg.norm() > diverge_scale) {
      throw std::runtime_error("run_constrained: iterate diverged at step " +
                               std::to_string(m));
    }
    TraceRow row;
    row.step = m;
    row.iterate = primal.history.back();
    row.average = avg;
    row.lambda = dual.lambda;
    row.loss_avg = problem.loss.value(avg);
    row.constraint_avg = problem.constraint.value(avg);
    trace.rows.push_back(std::move(row));
  }
  return trace;
}

Prop1Report check_prop1(const TraceReport& trace, double G, double tol) {
  Prop1Report report;
  if (trace.rows.size() < 3) {
    report.ok = false;
    report.message = "trace too short (need at least 2 steps)";
    return report;
  }
  for (std::size_t i = 1; i + 1 < trace.rows.size(); ++i) {
    const TraceRow& cur = trace.rows[i];
    const TraceRow& next = trace.rows[i + 1];
    const int m = cur.step;
    const Vector diff = next.average - cur.average;
    const Vector predicted = (next.iterate - cur.average) / static_cast<double>(m + 1);
    const double residual = (diff - predicted).norm();
    report.max_recurrence_residual = std::max(report.max_recurrence_residual, residual);

    const double iter_bound =
        (next.iterate.norm() + cur.average.norm()) / static_cast<double>(m + 1);
    const double cauchy_bound = 2.0 * G / static_cast<double>(m + 1);
    const double slack =
        std::max(diff.norm() - iter_bound, diff.norm() - cauchy_bound);
    report.max_bound_slack = std::max(report.max_bound_slack, slack);

    if ((residual > tol || slack > tol) && report.first_violation_step < 0) {
      report.ok = false;
      report.first_violation_step = m;
      report.message = "averaging certificate violated at step " + std::to_string(m);
    }
  }
  return report;
}

Prop2Report check_prop2_bounds(const TraceReport& trace, const ConvexProblem& problem) {
  Prop2Report report;
  const double eta2 = trace.eta2;
  const double lam0 = trace.lambda0;
  const double L = problem.L_bound;

  for (std::size_t i = 1; i < trace.rows.size(); ++i) {
    const TraceRow& row = trace.rows[i];
    const double m = static_cast<double>(row.step);
    const double g_plus = std::max(row.constraint_avg, 0.0);
    const double bound1_rhs = row.lambda / (m * eta2);
    const double bound2_rhs =
        problem.f_star + lam0 * lam0 / (2.0 * m * eta2) + 0.5 * eta2 * L * L;
    const double bound3_rhs = problem.f_star - problem.lambda_star * g_plus;

    int violated = 0;
    double lhs = 0.0, rhs = 0.0;
    if (g_plus > bound1_rhs + kCertSlack) {
      violated = 1; lhs = g_plus; rhs = bound1_rhs;
    } else if (row.loss_avg > bound2_rhs + kCertSlack) {
      violated = 2; lhs = row.loss_avg; rhs = bound2_rhs;
    } else if (row.loss_avg < bound3_rhs - kCertSlack) {
      violated = 3; lhs = row.loss_avg; rhs = bound3_rhs;
    }
    if (violated != 0) {
      report.ok = false;
      report.first_violation_step = row.step;
      report.violated_bound = violated;
      report.lhs = lhs;
      report.rhs = rhs;
      report.message = problem.name + ": bound " + std::to_string(violated) +
                       " violated at step " + std::to_string(row.step);
      return report;
    }
  }
  if (!trace.rows.empty()) {
    const TraceRow& last = trace.rows.back();
    report.final_constraint = std::max(last.constraint_avg, 0.0);
    report.final_bound1_rhs =
        last.step > 0 ? last.lambda / (static_cast<double>(last.step) * eta2) : 0.0;
  }
  return report;
}

void write_trace_csv(const std::string& path, const TraceReport& trace,
                     const ConvexProblem& problem, const std::string& comment) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_trace_csv: cannot open " + path);
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "step,loss_avg,constraint_avg,lambda,bound1_lhs,bound1_rhs,bound2_rhs,bound3_rhs\n";
  char buf[400];
  for (std::size_t i = 1; i < trace.rows.size(); ++i) {
    const TraceRow& row = trace.rows[i];
    const double m = static_cast<double>(row.step);
    const double g_plus = std::max(row.constraint_avg, 0.0);
    const double b1 = row.lambda / (m * trace.eta2);
    const double b2 = problem.f_star +
                      trace.lambda0 * trace.lambda0 / (2.0 * m * trace.eta2) +
                      0.5 * trace.eta2 * problem.L_bound * problem.L_bound;
    const double b3 = problem.f_star - problem.lambda_star * g_plus;
    std::snprintf(buf, sizeof(buf),
                  "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", row.step,
                  row.loss_avg, row.constraint_avg, row.lambda, g_plus, b1, b2, b3);
    out << buf;
  }
}

std::vector<SuiteEntry> builtin_certification_suite() {
  std::vector<SuiteEntry> suite;

  {  // min x^2  s.t. x >= 1, encoded as g(x) = max(1-x, 0); optimum x*=1
    ConvexProblem p;
    p.name = "quadratic_active";
    p.loss.value = [](const Vector& t) { return t[0] * t[0]; };
    p.loss.gradient = [](const Vector& t) {
      Vector g(1); g[0] = 2.0 * t[0]; return g;
    };
    p.constraint.value = [](const Vector& t) { return std::max(1.0 - t[0], 0.0); };
    p.constraint.gradient = [](const Vector& t) {
      Vector g(1); g[0] = t[0] < 1.0 ? -1.0 : 0.0; return g;
    };
    p.f_star = 1.0;
    p.lambda_star = 2.0;
    p.G = 1.0;
    p.L_bound = 1.5;
    p.exact_argmin = [](double lam) {
      Vector t(1); t[0] = std::min(lam / 2.0, 1.0); return t;
    };
    p.theta0 = Vector::Zero(1);

    RunConfig c;
    c.eta2 = 4.0;
    c.delta = 2e-4;
    c.lambda0 = 1.8;
    c.max_steps = 1200;
    c.primal_mode = PrimalMode::Exact;
    suite.push_back({std::move(p), c});
  }

  {  // min |t|^2  s.t. t1 + t2 >= 1; optimum (0.5, 0.5)
    ConvexProblem p;
    p.name = "halfplane_active";
    p.loss.value = [](const Vector& t) { return t.squaredNorm(); };
    p.loss.gradient = [](const Vector& t) { return Vector(2.0 * t); };
    p.constraint.value = [](const Vector& t) {
      return std::max(1.0 - t[0] - t[1], 0.0);
    };
    p.constraint.gradient = [](const Vector& t) {
      Vector g = Vector::Zero(t.size());
      if (1.0 - t[0] - t[1] > 0.0) { g[0] = -1.0; g[1] = -1.0; }
      return g;
    };
    p.f_star = 0.5;
    p.lambda_star = 1.0;
    p.G = 1.0;
    p.L_bound = 1.5;
    p.exact_argmin = [](double lam) {
      const double t = std::min(lam, 1.0) / 2.0;
      Vector v(2); v[0] = t; v[1] = t; return v;
    };
    p.theta0 = Vector::Zero(2);

    RunConfig c;
    c.eta2 = 3.0;
    c.delta = 2e-4;
    c.lambda0 = 0.9;
    c.max_steps = 1200;
    c.primal_mode = PrimalMode::Exact;
    suite.push_back({std::move(p), c});
  }

  {  // min (x-0.5)^2  s.t. x <= 1 via g(x) = max(x-1, 0); constraint slack
    ConvexProblem p;
    p.name = "quadratic_slack";
    p.loss.value = [](const Vector& t) {
      return (t[0] - 0.5) * (t[0] - 0.5);
    };
    p.loss.gradient = [](const Vector& t) {
      Vector g(1); g[0] = 2.0 * (t[0] - 0.5); return g;
    };
    p.constraint.value = [](const Vector& t) { return std::max(t[0] - 1.0, 0.0); };
    p.constraint.gradient = [](const Vector& t) {
      Vector g(1); g[0] = t[0] > 1.0 ? 1.0 : 0.0; return g;
    };
    p.f_star = 0.0;
    p.lambda_star = 0.0;
    p.G = 1.0;
    p.L_bound = 1.5;
    p.exact_argmin = [](double) {
      Vector t(1); t[0] = 0.5; return t;
    };
    p.theta0 = Vector::Zero(1);

    RunConfig c;
    c.eta2 = 4.0;
    c.delta = 2e-4;
    c.lambda0 = 0.3;
    c.max_steps = 1200;
    c.primal_mode = PrimalMode::Exact;
    suite.push_back({std::move(p), c});
  }

  return suite;
}

}  // namespace evident
