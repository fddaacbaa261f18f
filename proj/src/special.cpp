#include "bhmm/special.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace bhmm {

namespace {

// B_{2k}/(2k) for the digamma series, k = 1..7.
constexpr double kPsiCoef[] = {
    1.0 / 12.0,   -1.0 / 120.0,     1.0 / 252.0, -1.0 / 240.0,
    1.0 / 132.0,  -691.0 / 32760.0, 1.0 / 12.0,
};

// B_{2k}/(2k(2k-1)) for the log-gamma series, k = 1..7.
constexpr double kLgCoef[] = {
    1.0 / 12.0,   -1.0 / 360.0,      1.0 / 1260.0, -1.0 / 1680.0,
    1.0 / 1188.0, -691.0 / 360360.0, 1.0 / 156.0,
};

constexpr double kHalfLog2Pi = 0.91893853320467274178;

}  // namespace

double digamma(double x) {
    if (!(x > 0.0))
        throw std::domain_error("digamma: x must be positive");
    double acc = 0.0;
    while (x < 8.0) {
        acc -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x, inv2 = inv * inv;
    double series = 0.0, p = inv2;
    for (double c : kPsiCoef) {
        series += c * p;
        p *= inv2;
    }
    return acc + std::log(x) - 0.5 * inv - series;
}

double log_gamma(double x) {
    if (!(x > 0.0))
        throw std::domain_error("log_gamma: x must be positive");
    double acc = 0.0;
    while (x < 8.0) {
        acc -= std::log(x);
        x += 1.0;
    }
    const double inv = 1.0 / x, inv2 = inv * inv;
    double series = 0.0, p = inv;
    for (double c : kLgCoef) {
        series += c * p;
        p *= inv2;
    }
    return acc + (x - 0.5) * std::log(x) - x + kHalfLog2Pi + series;
}

double log_sum_exp(std::span<const double> values) {
    if (values.empty())
        throw std::domain_error("log_sum_exp: empty input");
    double m = -std::numeric_limits<double>::infinity();
    for (double v : values)
        if (v > m) m = v;
    if (!std::isfinite(m))
        return m;  // all -inf (or a +inf dominates)
    double s = 0.0;
    for (double v : values)
        s += std::exp(v - m);
    return m + std::log(s);
}

}  // namespace bhmm
