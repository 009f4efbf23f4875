#pragma once

namespace evident {

// Digamma psi(x) for x > 0.
// Absolute error <= 1e-10 on [1e-3, 1e6] (argument shift + asymptotic series).
// Throws std::domain_error for x <= 0 or non-finite x.
double digamma(double x);

// Trigamma psi'(x) for x > 0. Absolute error <= 1e-8 on [1e-3, 1e6].
double trigamma(double x);

// 1 / (1 + exp(t)) evaluated without overflow for any finite t.
// Monotone decreasing; stable_logistic(t) + stable_logistic(-t) == 1.
double stable_logistic(double t);

// log(1 + exp(x)) without overflow.
double softplus(double x);

// d/dx softplus(x) = 1 / (1 + exp(-x)).
double softplus_prime(double x);

}  // namespace evident
