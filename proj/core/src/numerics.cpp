#include "evident/numerics.hpp"

#include <cmath>
#include <stdexcept>

namespace evident {

namespace {
void check_positive(double x, const char* fn) {
  if (!std::isfinite(x) || x <= 0.0) {
    throw std::domain_error(std::string(fn) + ": argument must be finite and > 0");
  }
}
}  // namespace

double digamma(double x) {
  check_positive(x, "digamma");
  double result = 0.0;
  // psi(x) = psi(x+1) - 1/x; shift until the asymptotic series is accurate.
  while (x < 8.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  // psi(x) ~ ln x - 1/(2x) - sum B_{2n} / (2n x^{2n})
  const double t = 1.0 / (x * x);
  double series = t * (1.0 / 12.0 -
                  t * (1.0 / 120.0 -
                  t * (1.0 / 252.0 -
                  t * (1.0 / 240.0 -
                  t * (1.0 / 132.0 -
                  t * (691.0 / 32760.0))))));
  return result + std::log(x) - 0.5 / x - series;
}

double trigamma(double x) {
  check_positive(x, "trigamma");
  double result = 0.0;
  // psi'(x) = psi'(x+1) + 1/x^2
  while (x < 8.0) {
    result += 1.0 / (x * x);
    x += 1.0;
  }
  // psi'(x) ~ 1/x + 1/(2x^2) + sum B_{2n} / x^{2n+1}
  const double t = 1.0 / (x * x);
  double series = 1.0 + t * (1.0 / 6.0 -
                       t * (1.0 / 30.0 -
                       t * (1.0 / 42.0 -
                       t * (1.0 / 30.0 -
                       t * (5.0 / 66.0)))));
  return result + 0.5 * t + series / x;
}

double stable_logistic(double t) {
  if (t >= 0.0) {
    const double z = std::exp(-t);
    return z / (1.0 + z);
  }
  return 1.0 / (1.0 + std::exp(t));
}

double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double softplus_prime(double x) {
  return stable_logistic(-x);
}

}  // namespace evident
