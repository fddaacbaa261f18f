#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "bhmm/special.hpp"
#include "oracles.hpp"

using bhmm::digamma;
using bhmm::log_gamma;
using bhmm::log_sum_exp;

TEST_CASE("digamma recurrence psi(x+1)-psi(x)=1/x") {
    for (double x : {1.0, 2.5, 7.0})
        CHECK(digamma(x + 1.0) - digamma(x) == doctest::Approx(1.0 / x).epsilon(1e-12));
    for (int i = 1; i <= 1000; ++i) {
        const double x = 1e-3 + i * 0.731;
        CHECK(std::abs(digamma(x + 1.0) - digamma(x) - 1.0 / x) <
              1e-12 * std::max(1.0, 1.0 / x));
    }
}

TEST_CASE("digamma reference values") {
    CHECK(std::abs(digamma(1.0) - (-0.57721566490153286061)) < 1e-12);
    CHECK(std::abs(digamma(0.1) - (-10.423754940411076795)) < 1e-11);
    CHECK(std::abs(digamma(4.7) - 1.4374238096317816561) < 1e-12);
    // psi(n) ~ ln(n - 0.5) for large n
    CHECK(std::abs(digamma(1000.0) - std::log(999.5)) < 1e-7);
}

TEST_CASE("digamma domain") {
    CHECK_THROWS_AS(digamma(0.0), std::domain_error);
    CHECK_THROWS_AS(digamma(-3.0), std::domain_error);
}

TEST_CASE("log_gamma basics and recurrence") {
    CHECK(std::abs(log_gamma(1.0)) < 1e-14);
    CHECK(std::abs(log_gamma(2.0)) < 1e-14);
    for (double x : {0.5, 3.0, 100.0})
        CHECK(std::abs(log_gamma(x + 1.0) - log_gamma(x) - std::log(x)) < 1e-12);
    for (int i = 1; i <= 1000; ++i) {
        const double x = 1e-3 + i * 0.311;
        CHECK(std::abs(log_gamma(x + 1.0) - log_gamma(x) - std::log(x)) <
              1e-12 * std::max(1.0, std::abs(log_gamma(x))));
    }
}

TEST_CASE("log_gamma reference values") {
    CHECK(std::abs(log_gamma(10.5) - 13.940625219403763633) < 1e-10);
    CHECK(std::abs(log_gamma(0.5) - 0.57236494292470008707) < 1e-12);
    CHECK(std::abs(log_gamma(3.25) - 0.93580193110872535826) < 1e-12);
    CHECK(std::abs(log_gamma(1e-3) - 6.9071788853838536825) < 1e-12);
    // large argument: relative accuracy (1e-10 absolute is below one ulp here)
    CHECK(std::abs(log_gamma(1234.5) - 7550.5509010778948957) < 1e-10 * 7550.0);
    CHECK_THROWS_AS(log_gamma(0.0), std::domain_error);
}

TEST_CASE("log_sum_exp") {
    const std::vector<double> two_ones{std::log(1.0), std::log(1.0)};
    CHECK(log_sum_exp(two_ones) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    const std::vector<double> small{-1000.0, -1000.0};
    CHECK(log_sum_exp(small) ==
          doctest::Approx(-1000.0 + std::log(2.0)).epsilon(1e-15));
    std::vector<double> v;
    for (int i = 0; i < 10; ++i)
        v.push_back(-20.0 + 1.7 * i);
    CHECK(std::abs(log_sum_exp(v) - oracles::naive_log_sum_exp(v)) < 1e-12);
    CHECK_THROWS_AS(log_sum_exp(std::vector<double>{}), std::domain_error);
}
