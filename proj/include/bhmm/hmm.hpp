#ifndef BHMM_HMM_HPP
#define BHMM_HMM_HPP

#include <span>
#include <utility>
#include <vector>

#include "bhmm/rng.hpp"

namespace bhmm {

// State sequence, states 0..K-1.
using StatePath = std::vector<int>;

// A concrete HMM with Normal emissions.
struct HmmParams {
    int K = 0;
    std::vector<double> initial;  // K
    std::vector<double> trans;    // K*K row-major, row-stochastic
    std::vector<double> mu;       // K
    std::vector<double> sigma_sq; // K

    double p(int l, int j) const { return trans[static_cast<std::size_t>(l) * K + j]; }
    void validate() const;  // throws std::domain_error on invariant violations
};

// Log-domain scores for the generalized DP engine.  Rows of exp(log_trans)
// need not normalize and exp(log_emit) need not integrate to one; the
// optimality principle still applies (pseudo-HMM).
struct PseudoHmm {
    int K = 0;
    std::vector<double> log_initial;  // K
    std::vector<double> log_trans;    // K*K row-major
    std::vector<double> log_emit;     // n*K row-major

    int n() const { return K == 0 ? 0 : static_cast<int>(log_emit.size()) / K; }
    double lt(int l, int j) const { return log_trans[static_cast<std::size_t>(l) * K + j]; }
    double le(int t, int k) const { return log_emit[static_cast<std::size_t>(t) * K + k]; }

    static PseudoHmm from_params(const HmmParams& params, std::span<const double> obs);
};

// Smoothed marginals; xi is summed over t (the only form any update needs).
struct PosteriorStats {
    int K = 0;
    std::vector<double> gamma;  // n*K
    std::vector<double> xi;     // K*K, sum_t P(Y_t=l, Y_{t+1}=j | x)
    double log_evidence = 0.0;

    double g(int t, int k) const { return gamma[static_cast<std::size_t>(t) * K + k]; }
};

// Maximum-score path; ties break toward the lowest state index.
StatePath viterbi(const PseudoHmm& pseudo);

// Scaled forward-backward over the pseudo scores.
PosteriorStats forward_backward(const PseudoHmm& pseudo);

// Pointwise argmax of gamma, lowest index on ties.
StatePath pmap_path(const PosteriorStats& stats);

// One draw from the normalized path measure (backward variables, forward
// simulation -- Markovian backward sampling).
StatePath backward_sample(const PseudoHmm& pseudo, Rng& rng);

// Sample a chain realization and Normal observations from it.
std::pair<std::vector<double>, StatePath> generate_data(const HmmParams& params,
                                                        int n, Rng& rng);

// Log score of one path under the pseudo parameters.
double path_log_score(const PseudoHmm& pseudo, const StatePath& path);

}  // namespace bhmm

#endif
