#include "bhmm/cluster.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "bhmm/special.hpp"

namespace bhmm {

namespace {

struct Moments {
    std::vector<long> m;
    std::vector<double> sum;
    std::vector<double> sum_sq;
};

Moments moments(const ClusterAssignment& assign, std::span<const double> obs) {
    Moments mo;
    mo.m.assign(assign.K, 0);
    mo.sum.assign(assign.K, 0.0);
    mo.sum_sq.assign(assign.K, 0.0);
    for (std::size_t t = 0; t < obs.size(); ++t) {
        const int k = assign.labels[t];
        if (k < 0 || k >= assign.K)
            throw std::invalid_argument("cluster assignment: label out of range");
        mo.m[k] += 1;
        mo.sum[k] += obs[t];
        mo.sum_sq[k] += obs[t] * obs[t];
    }
    return mo;
}

// min over mu of  sum_{t in S_k}(x_t-mu)^2 + kappa0 (mu-xi_k)^2
//  = SS_k + kappa0 m_k/(kappa0+m_k) (xbar_k - xi_k)^2
double penalized_ss(const Moments& mo, int k, double kappa0, double xi) {
    if (mo.m[k] == 0)
        return 0.0;
    const double mk = static_cast<double>(mo.m[k]);
    const double xbar = mo.sum[k] / mk;
    double ss = mo.sum_sq[k] - mk * xbar * xbar;
    if (ss < 0.0)
        ss = 0.0;
    return ss + kappa0 * mk / (kappa0 + mk) * (xbar - xi) * (xbar - xi);
}

}  // namespace

std::vector<long> ClusterAssignment::sizes() const {
    std::vector<long> m(K, 0);
    for (int k : labels)
        m[k] += 1;
    return m;
}

std::vector<double> cluster_centers(const ClusterAssignment& assign,
                                    std::span<const double> obs, const NixPrior& prior) {
    const Moments mo = moments(assign, obs);
    std::vector<double> mu(assign.K);
    for (int k = 0; k < assign.K; ++k)
        mu[k] = (mo.sum[k] + prior.kappa0 * prior.xi[k]) /
                (prior.kappa0 + static_cast<double>(mo.m[k]));
    return mu;
}

double cluster_objective(const ClusterAssignment& assign, std::span<const double> obs,
                         const NixPrior& prior, ClusterVariant variant,
                         bool include_size_penalty) {
    const Moments mo = moments(assign, obs);
    double total = 0.0;
    for (int k = 0; k < assign.K; ++k) {
        const double mk = static_cast<double>(mo.m[k]);
        const double pss = penalized_ss(mo, k, prior.kappa0, prior.xi[k]);
        if (variant == ClusterVariant::Nu0Limit) {
            total += pss;
            if (include_size_penalty)
                total += prior.tau0_sq * std::log(prior.kappa0 + mk);
        } else {
            total += -log_gamma(0.5 * (prior.nu0 + mk)) +
                     0.5 * std::log(prior.kappa0 + mk) +
                     0.5 * (prior.nu0 + mk) *
                         std::log(prior.nu0 * prior.tau0_sq + pss);
        }
    }
    return total;
}

ClusterAssignment cluster_iterate(std::span<const double> obs, const NixPrior& prior,
                                  ClusterRule rule, const ClusterAssignment& init,
                                  int max_iters) {
    prior.validate();
    ClusterAssignment cur = init;
    const int K = cur.K;
    for (int it = 0; it < max_iters; ++it) {
        const std::vector<double> mu = cluster_centers(cur, obs, prior);
        const std::vector<long> m = cur.sizes();
        ClusterAssignment next = cur;
        for (std::size_t t = 0; t < obs.size(); ++t) {
            int arg = 0;
            double best = std::numeric_limits<double>::infinity();
            for (int k = 0; k < K; ++k) {
                double d = (obs[t] - mu[k]) * (obs[t] - mu[k]);
                if (rule == ClusterRule::EM)
                    d += prior.tau0_sq / (static_cast<double>(m[k]) + prior.kappa0);
                if (d < best) {
                    best = d;
                    arg = k;
                }
            }
            next.labels[t] = arg;
        }
        if (next.labels == cur.labels)
            break;
        cur = std::move(next);
    }
    return cur;
}

}  // namespace bhmm
