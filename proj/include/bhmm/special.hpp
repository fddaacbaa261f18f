#ifndef BHMM_SPECIAL_HPP
#define BHMM_SPECIAL_HPP

#include <span>

namespace bhmm {

// Digamma function psi(x), x > 0.  Recurrence shift to x >= 8 followed by
// the asymptotic series; absolute error below 1e-12 for x in [1e-3, 1e6].
double digamma(double x);

// ln Gamma(x), x > 0.  Same recurrence-shift + Stirling series scheme.
double log_gamma(double x);

// ln sum_i exp(v[i]) with max-shift; -inf entries are allowed.
double log_sum_exp(std::span<const double> values);

}  // namespace bhmm

#endif
