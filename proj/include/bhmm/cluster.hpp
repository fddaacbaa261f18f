#ifndef BHMM_CLUSTER_HPP
#define BHMM_CLUSTER_HPP

#include <span>
#include <vector>

#include "bhmm/model.hpp"

namespace bhmm {

struct ClusterAssignment {
    int K = 0;
    std::vector<int> labels;  // 0..K-1

    std::vector<long> sizes() const;
};

enum class ClusterVariant { Nu0Limit, FiniteNu0 };
enum class ClusterRule { MM, EM };

// Regularized centers (m_k xbar_k + kappa0 xi_k)/(kappa0 + m_k); an empty
// cluster keeps its prior mean.
std::vector<double> cluster_centers(const ClusterAssignment& assign,
                                    std::span<const double> obs, const NixPrior& prior);

// Nu0Limit: sum_k [ SS_k + kappa0 m_k/(kappa0+m_k)(xbar_k-xi_k)^2
//                   + tau0^2 ln(kappa0+m_k) ].
// FiniteNu0: -sum ln G((nu0+m_k)/2) + 1/2 sum ln(kappa0+m_k)
//            + sum (nu0+m_k)/2 ln(nu0 tau0^2 + min_mu[...]).
// include_size_penalty=false drops the tau0^2 term (Nu0Limit only).
double cluster_objective(const ClusterAssignment& assign, std::span<const double> obs,
                         const NixPrior& prior, ClusterVariant variant,
                         bool include_size_penalty = true);

// Alternate center updates with the MM (Voronoi) or EM (size-penalized)
// assignment rule; stops when the assignment repeats.
ClusterAssignment cluster_iterate(std::span<const double> obs, const NixPrior& prior,
                                  ClusterRule rule, const ClusterAssignment& init,
                                  int max_iters);

}  // namespace bhmm

#endif
