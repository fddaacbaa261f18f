#include "bhmm/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bhmm/errors.hpp"

namespace bhmm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Weights shifted so that the largest per-site emission (and the global
// max transition / initial score) become exp(0); every path picks up the
// same total shift, so the normalized path measure is unchanged.
struct ScaledWeights {
    int K = 0, n = 0;
    std::vector<double> w;     // K*K transition weights
    std::vector<double> e;     // n*K emission weights
    std::vector<double> init;  // K
    double log_shift = 0.0;    // total shift factored out of log-evidence
};

ScaledWeights scale(const PseudoHmm& ph) {
    const int K = ph.K, n = ph.n();
    if (K <= 0 || n <= 0)
        throw std::domain_error("pseudo hmm: empty");
    ScaledWeights sw;
    sw.K = K;
    sw.n = n;
    sw.w.resize(static_cast<std::size_t>(K) * K);
    sw.e.resize(static_cast<std::size_t>(n) * K);
    sw.init.resize(K);

    double gmax = kNegInf;
    for (double v : ph.log_trans) gmax = std::max(gmax, v);
    if (n > 1 && !std::isfinite(gmax))
        throw InfeasiblePathError("pseudo hmm: all transitions are -inf");
    if (n == 1) gmax = 0.0;
    for (std::size_t i = 0; i < ph.log_trans.size(); ++i)
        sw.w[i] = std::exp(ph.log_trans[i] - gmax);

    double imax = kNegInf;
    for (double v : ph.log_initial) imax = std::max(imax, v);
    if (!std::isfinite(imax))
        throw InfeasiblePathError("pseudo hmm: all initial scores are -inf");
    for (int k = 0; k < K; ++k)
        sw.init[k] = std::exp(ph.log_initial[k] - imax);

    double esum = 0.0;
    for (int t = 0; t < n; ++t) {
        double m = kNegInf;
        for (int k = 0; k < K; ++k) m = std::max(m, ph.le(t, k));
        if (!std::isfinite(m))
            throw InfeasiblePathError("pseudo hmm: a site has no feasible state");
        for (int k = 0; k < K; ++k)
            sw.e[static_cast<std::size_t>(t) * K + k] = std::exp(ph.le(t, k) - m);
        esum += m;
    }
    sw.log_shift = imax + (n - 1) * gmax + esum;
    return sw;
}

// Scaled forward pass; returns per-step normalizers in `scale_t`.
void forward(const ScaledWeights& sw, std::vector<double>& alpha,
             std::vector<double>& scale_t) {
    const int K = sw.K, n = sw.n;
    alpha.assign(static_cast<std::size_t>(n) * K, 0.0);
    scale_t.assign(n, 0.0);
    double s = 0.0;
    for (int k = 0; k < K; ++k) {
        alpha[k] = sw.init[k] * sw.e[k];
        s += alpha[k];
    }
    if (!(s > 0.0))
        throw InfeasiblePathError("forward: no feasible first state");
    scale_t[0] = s;
    for (int k = 0; k < K; ++k) alpha[k] /= s;
    for (int t = 1; t < n; ++t) {
        double* cur = &alpha[static_cast<std::size_t>(t) * K];
        const double* prev = &alpha[static_cast<std::size_t>(t - 1) * K];
        s = 0.0;
        for (int k = 0; k < K; ++k) {
            double acc = 0.0;
            for (int l = 0; l < K; ++l)
                acc += prev[l] * sw.w[static_cast<std::size_t>(l) * K + k];
            cur[k] = acc * sw.e[static_cast<std::size_t>(t) * K + k];
            s += cur[k];
        }
        if (!(s > 0.0))
            throw InfeasiblePathError("forward: no feasible continuation");
        scale_t[t] = s;
        for (int k = 0; k < K; ++k) cur[k] /= s;
    }
}

// Backward pass using the forward normalizers.
void backward(const ScaledWeights& sw, const std::vector<double>& scale_t,
              std::vector<double>& beta) {
    const int K = sw.K, n = sw.n;
    beta.assign(static_cast<std::size_t>(n) * K, 0.0);
    for (int k = 0; k < K; ++k)
        beta[static_cast<std::size_t>(n - 1) * K + k] = 1.0;
    for (int t = n - 2; t >= 0; --t) {
        double* cur = &beta[static_cast<std::size_t>(t) * K];
        const double* nxt = &beta[static_cast<std::size_t>(t + 1) * K];
        for (int l = 0; l < K; ++l) {
            double acc = 0.0;
            for (int k = 0; k < K; ++k)
                acc += sw.w[static_cast<std::size_t>(l) * K + k] *
                       sw.e[static_cast<std::size_t>(t + 1) * K + k] * nxt[k];
            cur[l] = acc / scale_t[t + 1];
        }
    }
}

}  // namespace

void HmmParams::validate() const {
    if (K <= 0)
        throw std::domain_error("HmmParams: K must be positive");
    auto check_simplex = [&](std::span<const double> v, const char* what) {
        double s = 0.0;
        for (double p : v) {
            if (!(p >= 0.0))
                throw std::domain_error(std::string(what) + ": negative entry");
            s += p;
        }
        if (std::abs(s - 1.0) > 1e-12)
            throw std::domain_error(std::string(what) + ": does not sum to 1");
    };
    if (static_cast<int>(initial.size()) != K ||
        static_cast<int>(trans.size()) != K * K ||
        static_cast<int>(mu.size()) != K || static_cast<int>(sigma_sq.size()) != K)
        throw std::domain_error("HmmParams: size mismatch");
    check_simplex(initial, "initial");
    for (int l = 0; l < K; ++l)
        check_simplex(std::span<const double>(trans).subspan(
                          static_cast<std::size_t>(l) * K, K),
                      "transition row");
    for (double v : sigma_sq)
        if (!(v > 0.0))
            throw std::domain_error("HmmParams: sigma^2 must be positive");
}

PseudoHmm PseudoHmm::from_params(const HmmParams& params, std::span<const double> obs) {
    const int K = params.K, n = static_cast<int>(obs.size());
    PseudoHmm ph;
    ph.K = K;
    ph.log_initial.resize(K);
    ph.log_trans.resize(static_cast<std::size_t>(K) * K);
    ph.log_emit.resize(static_cast<std::size_t>(n) * K);
    for (int k = 0; k < K; ++k)
        ph.log_initial[k] = std::log(params.initial[k]);
    for (std::size_t i = 0; i < ph.log_trans.size(); ++i)
        ph.log_trans[i] = std::log(params.trans[i]);
    for (int t = 0; t < n; ++t)
        for (int k = 0; k < K; ++k)
            ph.log_emit[static_cast<std::size_t>(t) * K + k] =
                -0.5 * std::log(2.0 * 3.14159265358979323846 * params.sigma_sq[k]) -
                (obs[t] - params.mu[k]) * (obs[t] - params.mu[k]) /
                    (2.0 * params.sigma_sq[k]);
    return ph;
}

StatePath viterbi(const PseudoHmm& pseudo) {
    const int K = pseudo.K, n = pseudo.n();
    if (K <= 0 || n <= 0)
        throw std::domain_error("viterbi: empty instance");
    std::vector<double> delta(K), next(K);
    std::vector<int> back(static_cast<std::size_t>(n) * K, 0);
    for (int k = 0; k < K; ++k)
        delta[k] = pseudo.log_initial[k] + pseudo.le(0, k);
    for (int t = 1; t < n; ++t) {
        for (int k = 0; k < K; ++k) {
            double best = kNegInf;
            int arg = 0;
            for (int l = 0; l < K; ++l) {
                const double cand = delta[l] + pseudo.lt(l, k);
                if (cand > best) {
                    best = cand;
                    arg = l;
                }
            }
            next[k] = best + pseudo.le(t, k);
            back[static_cast<std::size_t>(t) * K + k] = arg;
        }
        delta = next;
        bool any = false;
        for (double v : delta) any = any || v > kNegInf;
        if (!any)
            throw InfeasiblePathError("viterbi: all paths infeasible at step " +
                                      std::to_string(t));
    }
    int arg = 0;
    double best = kNegInf;
    for (int k = 0; k < K; ++k)
        if (delta[k] > best) {
            best = delta[k];
            arg = k;
        }
    if (!(best > kNegInf))
        throw InfeasiblePathError("viterbi: no feasible path");
    StatePath path(n);
    path[n - 1] = arg;
    for (int t = n - 1; t > 0; --t)
        path[t - 1] = back[static_cast<std::size_t>(t) * K + path[t]];
    return path;
}

PosteriorStats forward_backward(const PseudoHmm& pseudo) {
    const ScaledWeights sw = scale(pseudo);
    const int K = sw.K, n = sw.n;
    std::vector<double> alpha, beta, scale_t;
    forward(sw, alpha, scale_t);
    backward(sw, scale_t, beta);

    PosteriorStats out;
    out.K = K;
    out.gamma.resize(static_cast<std::size_t>(n) * K);
    out.xi.assign(static_cast<std::size_t>(K) * K, 0.0);
    for (std::size_t i = 0; i < out.gamma.size(); ++i)
        out.gamma[i] = alpha[i] * beta[i];
    for (int t = 0; t + 1 < n; ++t) {
        const double* a = &alpha[static_cast<std::size_t>(t) * K];
        const double* b = &beta[static_cast<std::size_t>(t + 1) * K];
        for (int l = 0; l < K; ++l)
            for (int j = 0; j < K; ++j)
                out.xi[static_cast<std::size_t>(l) * K + j] +=
                    a[l] * sw.w[static_cast<std::size_t>(l) * K + j] *
                    sw.e[static_cast<std::size_t>(t + 1) * K + j] * b[j] /
                    scale_t[t + 1];
    }
    double logz = sw.log_shift;
    for (double s : scale_t) logz += std::log(s);
    out.log_evidence = logz;
    return out;
}

StatePath pmap_path(const PosteriorStats& stats) {
    const int K = stats.K;
    const int n = static_cast<int>(stats.gamma.size()) / K;
    StatePath path(n);
    for (int t = 0; t < n; ++t) {
        int arg = 0;
        double best = stats.g(t, 0);
        for (int k = 1; k < K; ++k)
            if (stats.g(t, k) > best) {
                best = stats.g(t, k);
                arg = k;
            }
        path[t] = arg;
    }
    return path;
}

StatePath backward_sample(const PseudoHmm& pseudo, Rng& rng) {
    const ScaledWeights sw = scale(pseudo);
    const int K = sw.K, n = sw.n;
    // Backward variables need the forward normalizers only for scaling;
    // reuse forward() to obtain them (also validates feasibility).
    std::vector<double> alpha, beta, scale_t;
    forward(sw, alpha, scale_t);
    backward(sw, scale_t, beta);

    StatePath path(n);
    std::vector<double> probs(K);
    for (int k = 0; k < K; ++k)
        probs[k] = sw.init[k] * sw.e[k] * beta[k];
    path[0] = sample_categorical(rng, probs);
    for (int t = 1; t < n; ++t) {
        const int l = path[t - 1];
        for (int k = 0; k < K; ++k)
            probs[k] = sw.w[static_cast<std::size_t>(l) * K + k] *
                       sw.e[static_cast<std::size_t>(t) * K + k] *
                       beta[static_cast<std::size_t>(t) * K + k];
        path[t] = sample_categorical(rng, probs);
    }
    return path;
}

std::pair<std::vector<double>, StatePath> generate_data(const HmmParams& params,
                                                        int n, Rng& rng) {
    params.validate();
    if (n <= 0)
        throw std::domain_error("generate_data: n must be positive");
    StatePath truth(n);
    std::vector<double> obs(n);
    truth[0] = sample_categorical(rng, params.initial);
    for (int t = 1; t < n; ++t)
        truth[t] = sample_categorical(
            rng, std::span<const double>(params.trans)
                     .subspan(static_cast<std::size_t>(truth[t - 1]) * params.K,
                              params.K));
    for (int t = 0; t < n; ++t)
        obs[t] = sample_normal(rng, params.mu[truth[t]], params.sigma_sq[truth[t]]);
    return {std::move(obs), std::move(truth)};
}

double path_log_score(const PseudoHmm& pseudo, const StatePath& path) {
    const int n = pseudo.n();
    if (static_cast<int>(path.size()) != n)
        throw std::invalid_argument("path_log_score: length mismatch");
    double s = pseudo.log_initial[path[0]] + pseudo.le(0, path[0]);
    for (int t = 1; t < n; ++t)
        s += pseudo.lt(path[t - 1], path[t]) + pseudo.le(t, path[t]);
    return s;
}

}  // namespace bhmm
