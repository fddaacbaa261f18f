// Independent test oracles: exhaustive path enumeration, sequential
// (Polya-urn / predictive) factorizations, quadrature, and a plain Lloyd
// k-means.  These deliberately avoid the library's computation paths.
#ifndef BHMM_TEST_ORACLES_HPP
#define BHMM_TEST_ORACLES_HPP

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "bhmm/hmm.hpp"
#include "bhmm/model.hpp"

namespace oracles {

// Visit every path in S^n (lexicographic order, state 0 first).
inline void for_each_path(int K, int n, const std::function<void(const bhmm::StatePath&)>& fn) {
    bhmm::StatePath path(n, 0);
    for (;;) {
        fn(path);
        int t = n - 1;
        while (t >= 0 && path[t] == K - 1) {
            path[t] = 0;
            --t;
        }
        if (t < 0)
            return;
        path[t] += 1;
    }
}

inline double naive_log_sum_exp(std::span<const double> v) {
    long double s = 0.0L;
    for (double x : v)
        s += std::exp(static_cast<long double>(x));
    return static_cast<double>(std::log(s));
}

// Sequential Dirichlet-multinomial predictive product for ln p(y).
inline double polya_log_prior(const bhmm::StatePath& path,
                              const bhmm::DirichletPrior& prior,
                              std::span<const double> initial) {
    const int K = prior.K;
    std::vector<double> counts(static_cast<std::size_t>(K) * K, 0.0);
    double lp = std::log(initial[path[0]]);
    for (std::size_t t = 1; t < path.size(); ++t) {
        const int l = path[t - 1], j = path[t];
        double row = 0.0;
        for (int jj = 0; jj < K; ++jj)
            row += prior.alpha(l, jj) + counts[static_cast<std::size_t>(l) * K + jj];
        lp += std::log((prior.alpha(l, j) + counts[static_cast<std::size_t>(l) * K + j]) / row);
        counts[static_cast<std::size_t>(l) * K + j] += 1.0;
    }
    return lp;
}

// Location-scale Student-t log density.
inline double student_t_logpdf(double x, double dof, double loc, double scale_sq) {
    const double z = (x - loc) * (x - loc) / (dof * scale_sq);
    return std::lgamma(0.5 * (dof + 1.0)) - std::lgamma(0.5 * dof) -
           0.5 * std::log(dof * 3.14159265358979323846 * scale_sq) -
           0.5 * (dof + 1.0) * std::log1p(z);
}

// Composite-Simpson tensor quadrature on [ax,bx] x [ay,by] of exp(logf).
inline double log_quad2d(const std::function<double(double, double)>& logf,
                         double ax, double bx, double ay, double by,
                         int nx, int ny, double log_shift) {
    if (nx % 2 == 1) ++nx;
    if (ny % 2 == 1) ++ny;
    const double hx = (bx - ax) / nx, hy = (by - ay) / ny;
    auto wt = [](int i, int n) { return i == 0 || i == n ? 1.0 : (i % 2 ? 4.0 : 2.0); };
    long double total = 0.0L;
    for (int i = 0; i <= nx; ++i) {
        const double x = ax + i * hx;
        long double row = 0.0L;
        for (int j = 0; j <= ny; ++j) {
            const double y = ay + j * hy;
            row += wt(j, ny) * std::exp(static_cast<long double>(logf(x, y) - log_shift));
        }
        total += wt(i, nx) * row;
    }
    total *= static_cast<long double>(hx) * hy / 9.0L;
    return log_shift + static_cast<double>(std::log(total));
}

// Plain Lloyd k-means in 1-D (fixed-point reference).
inline std::vector<int> lloyd(std::span<const double> obs, int K,
                              std::vector<int> labels, int iters) {
    std::vector<double> mu(K, 0.0);
    for (int it = 0; it < iters; ++it) {
        std::vector<double> sum(K, 0.0);
        std::vector<int> cnt(K, 0);
        for (std::size_t t = 0; t < obs.size(); ++t) {
            sum[labels[t]] += obs[t];
            cnt[labels[t]] += 1;
        }
        for (int k = 0; k < K; ++k)
            mu[k] = cnt[k] ? sum[k] / cnt[k] : mu[k];
        std::vector<int> next(labels.size());
        for (std::size_t t = 0; t < obs.size(); ++t) {
            int arg = 0;
            double best = std::abs(obs[t] - mu[0]);
            for (int k = 1; k < K; ++k) {
                const double d = std::abs(obs[t] - mu[k]);
                if (d < best) {
                    best = d;
                    arg = k;
                }
            }
            next[t] = arg;
        }
        if (next == labels)
            break;
        labels = std::move(next);
    }
    return labels;
}

}  // namespace oracles

#endif
