#ifndef BHMM_SEGMENT_HPP
#define BHMM_SEGMENT_HPP

#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "bhmm/hmm.hpp"
#include "bhmm/model.hpp"

namespace bhmm {

// One segmentation problem instance: data, priors, known initial law.
struct Problem {
    std::vector<double> obs;
    DirichletPrior prior;
    EmissionMode mode;
    std::vector<double> initial;

    int K() const { return prior.K; }
    int n() const { return static_cast<int>(obs.size()); }
    double score(const StatePath& path) const {
        return log_joint(path, obs, prior, mode, initial);
    }
};

struct SegmenterConfig {
    int max_iters = 500;
    double tol = 1e-8;
    // (inverse temperature, samples at that temperature), nondecreasing beta
    std::vector<std::pair<double, int>> sa_schedule;
    std::uint64_t seed = 0;

    void validate() const;
};

// Equally spaced inverse temperatures on [beta_min, beta_max].
std::vector<std::pair<double, int>> make_sa_schedule(double beta_min, double beta_max,
                                                     int steps, int samples_per_beta);

struct RunTrace {
    // Per-iteration log p(y,x) of the current path.  For bayes_em this is
    // the theta posterior score instead; for SA the running best.
    std::vector<double> scores;
    int iterations = 0;
    bool converged = false;
    StatePath path;
    double final_log_joint = -std::numeric_limits<double>::infinity();
};

// ---- step-level pieces, exposed so tests can drive them directly ----

// Pseudo parameters of one segmentation-EM step: ln u from digamma counts,
// ln h from the fixed densities or the per-state NIX posterior.
PseudoHmm seg_em_pseudo(const Problem& prob, const PathStats& stats);

// Pseudo parameters of one VB step from averaged counts (gamma, xi).
PseudoHmm vb_pseudo(const Problem& prob, const std::vector<double>& gamma,
                    const std::vector<double>& xi);

// M-step of (Bayesian) EM from averaged counts; flat_prior drops the prior
// terms (standard EM).
HmmParams em_mstep(const Problem& prob, const std::vector<double>& gamma,
                   const std::vector<double>& xi, bool flat_prior);

// ln p(x|theta) + ln pi(theta) (prior term dropped when flat).
double theta_log_posterior(const Problem& prob, const HmmParams& params,
                           bool flat_prior);

// gamma/xi initialization from a concrete path (indicator marginals).
void init_soft_counts(const StatePath& path, int K, std::vector<double>& gamma,
                      std::vector<double>& xi);

// ---- the seven segmenters ----

RunTrace seg_em(const Problem& prob, const StatePath& init, const SegmenterConfig& cfg);
RunTrace seg_mm(const Problem& prob, const StatePath& init, const SegmenterConfig& cfg);
RunTrace bayes_em(const Problem& prob, const StatePath& init, const SegmenterConfig& cfg,
                  bool flat_prior, HmmParams* final_params = nullptr);
RunTrace variational_bayes(const Problem& prob, const StatePath& init,
                           const SegmenterConfig& cfg);
RunTrace icm(const Problem& prob, const StatePath& init, const SegmenterConfig& cfg);
RunTrace simulated_annealing(const Problem& prob, const StatePath& init,
                             const SegmenterConfig& cfg);

}  // namespace bhmm

#endif
