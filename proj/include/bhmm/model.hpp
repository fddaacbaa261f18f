#ifndef BHMM_MODEL_HPP
#define BHMM_MODEL_HPP

#include <span>
#include <variant>
#include <vector>

#include "bhmm/hmm.hpp"
#include "bhmm/rng.hpp"

namespace bhmm {

// Dirichlet transition prior, alpha_lj = M * q_lj.
struct DirichletPrior {
    int K = 0;
    double M = 0.0;
    std::vector<double> Q;  // K*K row-major, row-stochastic

    double alpha(int l, int j) const { return M * Q[static_cast<std::size_t>(l) * K + j]; }
    double min_alpha() const;
    void validate() const;
};

// Normal-Inverse-chi^2 emission prior, shared kappa0/nu0/tau0^2 across states.
struct NixPrior {
    int K = 0;
    std::vector<double> xi;  // K prior means
    double kappa0 = 0.0;
    double nu0 = 0.0;
    double tau0_sq = 0.0;

    void validate() const;
};

struct FixedEmissions {
    std::vector<double> mu;
    std::vector<double> sigma_sq;
};

// Exactly one of: known Normal emissions, or NIX-Bayes emissions.
using EmissionMode = std::variant<FixedEmissions, NixPrior>;

inline bool is_fixed(const EmissionMode& m) {
    return std::holds_alternative<FixedEmissions>(m);
}

// Transition counts plus per-state emission moment sums of one path.
struct PathStats {
    int K = 0;
    long n = 0;
    int first_state = 0;
    std::vector<long> counts;      // K*K n_lj
    std::vector<long> row_totals;  // K   n_l
    std::vector<long> m;           // K   occupancy
    std::vector<double> sum;       // K   sum of obs in state k
    std::vector<double> sum_sq;    // K   sum of squared obs

    long c(int l, int j) const { return counts[static_cast<std::size_t>(l) * K + j]; }
};

// Conjugate NIX posterior per state (k-nid updates).
struct NixPosterior {
    std::vector<double> kappa;      // kappa0 + m_k
    std::vector<double> nu;         // nu0 + m_k
    std::vector<double> mu;         // posterior mean
    std::vector<double> nu_tau_sq;  // nu_k * tau_k^2
};

PathStats path_stats(const StatePath& path, std::span<const double> obs, int K);

// ln p(y) under the Dirichlet prior (Gamma-ratio product).  Structural
// zeros (q_lj = 0): a path using that transition is infeasible.
double log_path_prior(const PathStats& stats, const DirichletPrior& prior,
                      std::span<const double> initial);

// ln p(x|y): exact Normal likelihood (Fixed) or the NIX marginal.
double log_emission_marginal(const PathStats& stats, const EmissionMode& mode);

// ln p(y,x) = ln p(y) + ln p(x|y) -- the comparison score everywhere.
double log_joint(const StatePath& path, std::span<const double> obs,
                 const DirichletPrior& prior, const EmissionMode& mode,
                 std::span<const double> initial);
double log_joint(const PathStats& stats, const DirichletPrior& prior,
                 const EmissionMode& mode, std::span<const double> initial);

NixPosterior nix_posterior(const PathStats& stats, const NixPrior& prior);

// Posterior-mode parameters given the path (segmentation-MM half step).
// Requires alpha_lj + n_lj > 1 everywhere.
HmmParams posterior_modes(const PathStats& stats, const DirichletPrior& prior,
                          const EmissionMode& mode, std::span<const double> initial);

// ln of the unnormalized tempered marginal  integral p(y,x|th)^b pi(th)^b dth.
// Reduces bitwise to log_joint at beta = 1.
double log_tempered_joint(double beta, const PathStats& stats,
                          const DirichletPrior& prior, const EmissionMode& mode,
                          std::span<const double> initial);

// One draw from p_beta(theta | y, x): Dirichlet rows with parameters
// beta*(alpha+n)+1-beta, emissions from the beta-tempered NIX posterior.
HmmParams tempered_theta_sample(double beta, const PathStats& stats,
                                const DirichletPrior& prior,
                                const EmissionMode& mode,
                                std::span<const double> initial, Rng& rng);

}  // namespace bhmm

#endif
