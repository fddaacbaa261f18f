#include "bhmm/model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "bhmm/errors.hpp"
#include "bhmm/special.hpp"

namespace bhmm {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kTwoPi = 6.2831853071795864769;

// Centered sum of squares; the (m-1)s^2 term vanishes for m <= 1.
double centered_ss(const PathStats& stats, int k) {
    if (stats.m[k] <= 1)
        return 0.0;
    const double css =
        stats.sum_sq[k] - stats.sum[k] * stats.sum[k] / static_cast<double>(stats.m[k]);
    return css > 0.0 ? css : 0.0;
}

// ln of the tempered Dirichlet-path factor
//   beta*ln p0_{y1} + sum_l [ beta*(ln G(a_l) - sum_j ln G(a_lj))
//                             + sum_j ln G(b_lj) - ln G(sum_j b_lj) ],
// b_lj = beta*(a_lj + n_lj) + 1 - beta.  Structural zeros (q_lj = 0) are
// excluded from the row support; a count on one makes the path infeasible.
double tempered_dirichlet_part(double beta, const PathStats& stats,
                               const DirichletPrior& prior,
                               std::span<const double> initial) {
    const int K = stats.K;
    const double p0 = initial[stats.first_state];
    if (!(p0 > 0.0))
        throw InfeasiblePathError("path starts in a zero-probability state");
    double total = beta * std::log(p0);
    for (int l = 0; l < K; ++l) {
        double alpha_l = 0.0, prior_norm = 0.0, row = 0.0, b_row = 0.0;
        for (int j = 0; j < K; ++j) {
            const double a = prior.alpha(l, j);
            const long nlj = stats.c(l, j);
            if (a <= 0.0) {
                if (nlj > 0)
                    throw InfeasiblePathError(
                        "path uses a structural-zero transition " +
                        std::to_string(l) + "->" + std::to_string(j));
                continue;
            }
            alpha_l += a;
            prior_norm -= log_gamma(a);
            double b;
            if (beta == 1.0) {
                b = a + static_cast<double>(nlj);
            } else {
                b = beta * (a + static_cast<double>(nlj)) + 1.0 - beta;
                if (!(b > 0.0))
                    throw InfeasibleTemperatureError(
                        "tempered Dirichlet parameter non-positive at beta=" +
                        std::to_string(beta));
            }
            row += log_gamma(b);
            b_row += b;
        }
        total += beta * (log_gamma(alpha_l) + prior_norm) + row - log_gamma(b_row);
    }
    return total;
}

double fixed_emission_loglik(const PathStats& stats, const FixedEmissions& em) {
    double total = 0.0;
    for (int k = 0; k < stats.K; ++k) {
        if (stats.m[k] == 0)
            continue;
        const double mk = static_cast<double>(stats.m[k]);
        const double mu = em.mu[k], s2 = em.sigma_sq[k];
        const double rss = stats.sum_sq[k] - 2.0 * mu * stats.sum[k] + mk * mu * mu;
        total += -0.5 * mk * (kLog2Pi + std::log(s2)) - rss / (2.0 * s2);
    }
    return total;
}

// ln integral prod_{t in S_k} f(x_t|mu,s2)^beta * pi(mu,s2)^beta d(mu,s2),
// summed over states.  The beta power of the joint NIX density stays in
// the family with kappa_b = b*kappa, nu_b = b*(nu+3)-3, nu_b*tau_b^2 =
// b*nu*tau^2 (verified against a quadrature oracle).
double tempered_nix_part(double beta, const PathStats& stats, const NixPrior& prior) {
    const double k0 = prior.kappa0, n0 = prior.nu0, t0 = prior.tau0_sq;
    double total = 0.0;
    for (int k = 0; k < stats.K; ++k) {
        const double mk = static_cast<double>(stats.m[k]);
        const double kap = k0 + mk;
        const double nu = n0 + mk;
        double nts = n0 * t0 + centered_ss(stats, k);
        if (stats.m[k] > 0) {
            const double xbar = stats.sum[k] / mk;
            nts += k0 * mk / kap * (xbar - prior.xi[k]) * (xbar - prior.xi[k]);
        }
        double kb, nb, nbt;
        if (beta == 1.0) {
            kb = kap;
            nb = nu;
            nbt = nts;
        } else {
            kb = beta * kap;
            nb = beta * (nu + 3.0) - 3.0;
            nbt = beta * nts;
        }
        total += beta * (0.5 * n0 * std::log(0.5 * n0 * t0) - log_gamma(0.5 * n0) +
                         0.5 * std::log(k0 / kTwoPi));
        total += -0.5 * beta * mk * kLog2Pi;
        total += -0.5 * std::log(kb / kTwoPi);
        total += log_gamma(0.5 * nb) - 0.5 * nb * std::log(0.5 * nbt);
    }
    return total;
}

double tempered_emission_part(double beta, const PathStats& stats,
                              const EmissionMode& mode) {
    if (const auto* fixed = std::get_if<FixedEmissions>(&mode))
        return beta * fixed_emission_loglik(stats, *fixed);
    return tempered_nix_part(beta, stats, std::get<NixPrior>(mode));
}

}  // namespace

double DirichletPrior::min_alpha() const {
    double mn = std::numeric_limits<double>::infinity();
    for (int l = 0; l < K; ++l)
        for (int j = 0; j < K; ++j)
            mn = std::min(mn, alpha(l, j));
    return mn;
}

void DirichletPrior::validate() const {
    if (K <= 0 || !(M > 0.0) || static_cast<int>(Q.size()) != K * K)
        throw std::domain_error("DirichletPrior: bad shape or M <= 0");
    for (int l = 0; l < K; ++l) {
        double s = 0.0;
        for (int j = 0; j < K; ++j) {
            const double q = Q[static_cast<std::size_t>(l) * K + j];
            if (!(q >= 0.0))
                throw std::domain_error("DirichletPrior: negative q");
            s += q;
        }
        if (std::abs(s - 1.0) > 1e-12)
            throw std::domain_error("DirichletPrior: Q row does not sum to 1");
    }
}

void NixPrior::validate() const {
    if (K <= 0 || static_cast<int>(xi.size()) != K)
        throw std::domain_error("NixPrior: bad shape");
    if (!(kappa0 > 0.0) || !(nu0 > 0.0) || !(tau0_sq > 0.0))
        throw std::domain_error("NixPrior: hyperparameters must be positive");
}

PathStats path_stats(const StatePath& path, std::span<const double> obs, int K) {
    if (path.empty() || path.size() != obs.size())
        throw std::invalid_argument("path_stats: path/observation length mismatch");
    PathStats st;
    st.K = K;
    st.n = static_cast<long>(path.size());
    st.first_state = path[0];
    st.counts.assign(static_cast<std::size_t>(K) * K, 0);
    st.row_totals.assign(K, 0);
    st.m.assign(K, 0);
    st.sum.assign(K, 0.0);
    st.sum_sq.assign(K, 0.0);
    for (std::size_t t = 0; t < path.size(); ++t) {
        const int k = path[t];
        if (k < 0 || k >= K)
            throw std::invalid_argument("path_stats: state out of range");
        st.m[k] += 1;
        st.sum[k] += obs[t];
        st.sum_sq[k] += obs[t] * obs[t];
        if (t > 0) {
            st.counts[static_cast<std::size_t>(path[t - 1]) * K + k] += 1;
            st.row_totals[path[t - 1]] += 1;
        }
    }
    return st;
}

double log_path_prior(const PathStats& stats, const DirichletPrior& prior,
                      std::span<const double> initial) {
    return tempered_dirichlet_part(1.0, stats, prior, initial);
}

double log_emission_marginal(const PathStats& stats, const EmissionMode& mode) {
    return tempered_emission_part(1.0, stats, mode);
}

double log_joint(const PathStats& stats, const DirichletPrior& prior,
                 const EmissionMode& mode, std::span<const double> initial) {
    return tempered_dirichlet_part(1.0, stats, prior, initial) +
           tempered_emission_part(1.0, stats, mode);
}

double log_joint(const StatePath& path, std::span<const double> obs,
                 const DirichletPrior& prior, const EmissionMode& mode,
                 std::span<const double> initial) {
    return log_joint(path_stats(path, obs, prior.K), prior, mode, initial);
}

NixPosterior nix_posterior(const PathStats& stats, const NixPrior& prior) {
    prior.validate();
    NixPosterior post;
    const int K = stats.K;
    post.kappa.resize(K);
    post.nu.resize(K);
    post.mu.resize(K);
    post.nu_tau_sq.resize(K);
    for (int k = 0; k < K; ++k) {
        const double mk = static_cast<double>(stats.m[k]);
        post.kappa[k] = prior.kappa0 + mk;
        post.nu[k] = prior.nu0 + mk;
        double nts = prior.nu0 * prior.tau0_sq + centered_ss(stats, k);
        double mean = prior.xi[k];
        if (stats.m[k] > 0) {
            const double xbar = stats.sum[k] / mk;
            mean = (prior.kappa0 * prior.xi[k] + mk * xbar) / post.kappa[k];
            nts += prior.kappa0 * mk / post.kappa[k] * (xbar - prior.xi[k]) *
                   (xbar - prior.xi[k]);
        }
        post.mu[k] = mean;
        post.nu_tau_sq[k] = nts;
    }
    return post;
}

HmmParams posterior_modes(const PathStats& stats, const DirichletPrior& prior,
                          const EmissionMode& mode, std::span<const double> initial) {
    const int K = stats.K;
    HmmParams out;
    out.K = K;
    out.initial.assign(initial.begin(), initial.end());
    out.trans.assign(static_cast<std::size_t>(K) * K, 0.0);
    for (int l = 0; l < K; ++l) {
        double denom = 0.0;
        for (int j = 0; j < K; ++j) {
            const double a = prior.alpha(l, j);
            const long nlj = stats.c(l, j);
            if (a <= 0.0) {
                if (nlj > 0)
                    throw InfeasiblePathError("posterior_modes: structural-zero count");
                continue;
            }
            const double num = a + static_cast<double>(nlj) - 1.0;
            if (!(num > 0.0))
                throw ModeInfeasibleError(
                    "posterior mode invalid: alpha_lj + n_lj <= 1 at (" +
                    std::to_string(l) + "," + std::to_string(j) + ")");
            denom += num;
        }
        for (int j = 0; j < K; ++j) {
            const double a = prior.alpha(l, j);
            if (a <= 0.0)
                continue;
            out.trans[static_cast<std::size_t>(l) * K + j] =
                (a + static_cast<double>(stats.c(l, j)) - 1.0) / denom;
        }
    }
    if (const auto* fixed = std::get_if<FixedEmissions>(&mode)) {
        out.mu = fixed->mu;
        out.sigma_sq = fixed->sigma_sq;
    } else {
        const NixPosterior post = nix_posterior(stats, std::get<NixPrior>(mode));
        out.mu = post.mu;
        out.sigma_sq.resize(K);
        for (int k = 0; k < K; ++k)
            out.sigma_sq[k] = post.nu_tau_sq[k] / (post.nu[k] + 2.0);
    }
    return out;
}

double log_tempered_joint(double beta, const PathStats& stats,
                          const DirichletPrior& prior, const EmissionMode& mode,
                          std::span<const double> initial) {
    if (!(beta >= 1.0))
        throw std::domain_error("log_tempered_joint: beta must be >= 1");
    return tempered_dirichlet_part(beta, stats, prior, initial) +
           tempered_emission_part(beta, stats, mode);
}

HmmParams tempered_theta_sample(double beta, const PathStats& stats,
                                const DirichletPrior& prior,
                                const EmissionMode& mode,
                                std::span<const double> initial, Rng& rng) {
    if (!(beta >= 1.0))
        throw std::domain_error("tempered_theta_sample: beta must be >= 1");
    const int K = stats.K;
    HmmParams out;
    out.K = K;
    out.initial.assign(initial.begin(), initial.end());
    out.trans.assign(static_cast<std::size_t>(K) * K, 0.0);
    std::vector<double> a;
    std::vector<int> support;
    for (int l = 0; l < K; ++l) {
        a.clear();
        support.clear();
        for (int j = 0; j < K; ++j) {
            const double alpha = prior.alpha(l, j);
            const long nlj = stats.c(l, j);
            if (alpha <= 0.0) {
                if (nlj > 0)
                    throw InfeasiblePathError("tempered_theta_sample: structural-zero count");
                continue;
            }
            double b;
            if (beta == 1.0) {
                b = alpha + static_cast<double>(nlj);
            } else {
                b = beta * (alpha + static_cast<double>(nlj)) + 1.0 - beta;
                if (!(b > 0.0))
                    throw InfeasibleTemperatureError(
                        "tempered Dirichlet parameter non-positive");
            }
            a.push_back(b);
            support.push_back(j);
        }
        const std::vector<double> row = sample_dirichlet(rng, a);
        for (std::size_t i = 0; i < support.size(); ++i)
            out.trans[static_cast<std::size_t>(l) * K + support[i]] = row[i];
    }
    if (const auto* fixed = std::get_if<FixedEmissions>(&mode)) {
        out.mu = fixed->mu;
        out.sigma_sq = fixed->sigma_sq;
    } else {
        const NixPosterior post = nix_posterior(stats, std::get<NixPrior>(mode));
        out.mu.resize(K);
        out.sigma_sq.resize(K);
        for (int k = 0; k < K; ++k) {
            double kb, nb, nbt;
            if (beta == 1.0) {
                kb = post.kappa[k];
                nb = post.nu[k];
                nbt = post.nu_tau_sq[k];
            } else {
                kb = beta * post.kappa[k];
                nb = beta * (post.nu[k] + 3.0) - 3.0;
                nbt = beta * post.nu_tau_sq[k];
            }
            const double s2 = sample_scaled_inv_chisq(rng, nb, nbt / nb);
            out.sigma_sq[k] = s2;
            out.mu[k] = sample_normal(rng, post.mu[k], s2 / kb);
        }
    }
    return out;
}

}  // namespace bhmm
