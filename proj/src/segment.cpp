#include "bhmm/segment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bhmm/errors.hpp"
#include "bhmm/special.hpp"

namespace bhmm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093454836;

std::vector<double> normal_log_emit(std::span<const double> obs,
                                    std::span<const double> mu,
                                    std::span<const double> sigma_sq) {
    const int K = static_cast<int>(mu.size());
    const int n = static_cast<int>(obs.size());
    std::vector<double> le(static_cast<std::size_t>(n) * K);
    for (int k = 0; k < K; ++k) {
        const double c = -0.5 * (kLog2Pi + std::log(sigma_sq[k]));
        const double inv = 1.0 / (2.0 * sigma_sq[k]);
        for (int t = 0; t < n; ++t)
            le[static_cast<std::size_t>(t) * K + k] =
                c - (obs[t] - mu[k]) * (obs[t] - mu[k]) * inv;
    }
    return le;
}

// Posterior-expected Gaussian log-density (the h_k scores): per state
//   -1/2 ln(2 pi tau^2) - 1/2 [ln(nu/2) - psi(nu/2)]
//   - x^2/(2 tau^2) + x mu/tau^2 - 1/2 [1/kappa + mu^2/tau^2].
std::vector<double> nix_expected_log_emit(std::span<const double> obs,
                                          std::span<const double> kappa,
                                          std::span<const double> nu,
                                          std::span<const double> mu,
                                          std::span<const double> nu_tau_sq) {
    const int K = static_cast<int>(kappa.size());
    const int n = static_cast<int>(obs.size());
    std::vector<double> le(static_cast<std::size_t>(n) * K);
    for (int k = 0; k < K; ++k) {
        const double tau_sq = nu_tau_sq[k] / nu[k];
        const double c = -0.5 * (kLog2Pi + std::log(tau_sq)) -
                         0.5 * (std::log(0.5 * nu[k]) - digamma(0.5 * nu[k])) -
                         0.5 * (1.0 / kappa[k] + mu[k] * mu[k] / tau_sq);
        const double inv = 1.0 / tau_sq;
        for (int t = 0; t < n; ++t)
            le[static_cast<std::size_t>(t) * K + k] =
                c - 0.5 * obs[t] * obs[t] * inv + obs[t] * mu[k] * inv;
    }
    return le;
}

std::vector<double> log_initial_of(const Problem& prob) {
    std::vector<double> li(prob.K());
    for (int k = 0; k < prob.K(); ++k)
        li[k] = std::log(prob.initial[k]);
    return li;
}

// ln u_lj = psi(alpha_lj + c_lj) - psi(alpha_l + c_l) over the support.
std::vector<double> digamma_log_trans(const DirichletPrior& prior,
                                      const std::vector<double>& cell_counts) {
    const int K = prior.K;
    std::vector<double> lt(static_cast<std::size_t>(K) * K, kNegInf);
    for (int l = 0; l < K; ++l) {
        double row_mass = 0.0;
        for (int j = 0; j < K; ++j) {
            const double a = prior.alpha(l, j);
            if (a <= 0.0)
                continue;
            row_mass += a + cell_counts[static_cast<std::size_t>(l) * K + j];
        }
        const double psi_row = digamma(row_mass);
        for (int j = 0; j < K; ++j) {
            const double a = prior.alpha(l, j);
            if (a <= 0.0)
                continue;
            lt[static_cast<std::size_t>(l) * K + j] =
                digamma(a + cell_counts[static_cast<std::size_t>(l) * K + j]) - psi_row;
        }
    }
    return lt;
}

std::vector<double> counts_as_doubles(const PathStats& stats) {
    std::vector<double> c(stats.counts.size());
    for (std::size_t i = 0; i < c.size(); ++i)
        c[i] = static_cast<double>(stats.counts[i]);
    return c;
}

PseudoHmm tempered_pseudo(const HmmParams& params, std::span<const double> obs,
                          double beta) {
    PseudoHmm ph = PseudoHmm::from_params(params, obs);
    if (beta != 1.0) {
        for (double& v : ph.log_initial) v *= beta;
        for (double& v : ph.log_trans) v *= beta;
        for (double& v : ph.log_emit) v *= beta;
    }
    return ph;
}

}  // namespace

void SegmenterConfig::validate() const {
    if (max_iters < 1)
        throw std::domain_error("SegmenterConfig: max_iters must be >= 1");
    if (!(tol > 0.0))
        throw std::domain_error("SegmenterConfig: tol must be positive");
    double prev = 1.0;
    for (const auto& [beta, count] : sa_schedule) {
        if (!(beta >= prev))
            throw std::domain_error("SegmenterConfig: beta schedule must be "
                                    "nondecreasing and start at >= 1");
        if (count < 1)
            throw std::domain_error("SegmenterConfig: samples per beta must be >= 1");
        prev = beta;
    }
}

std::vector<std::pair<double, int>> make_sa_schedule(double beta_min, double beta_max,
                                                     int steps, int samples_per_beta) {
    if (steps < 1 || !(beta_min >= 1.0) || !(beta_max >= beta_min))
        throw std::domain_error("make_sa_schedule: bad schedule parameters");
    std::vector<std::pair<double, int>> sched;
    sched.reserve(steps);
    for (int i = 0; i < steps; ++i) {
        const double beta =
            steps == 1 ? beta_min
                       : beta_min + (beta_max - beta_min) * i / (steps - 1.0);
        sched.emplace_back(beta, samples_per_beta);
    }
    return sched;
}

PseudoHmm seg_em_pseudo(const Problem& prob, const PathStats& stats) {
    PseudoHmm ph;
    ph.K = prob.K();
    ph.log_initial = log_initial_of(prob);
    ph.log_trans = digamma_log_trans(prob.prior, counts_as_doubles(stats));
    if (const auto* fixed = std::get_if<FixedEmissions>(&prob.mode)) {
        ph.log_emit = normal_log_emit(prob.obs, fixed->mu, fixed->sigma_sq);
    } else {
        const NixPosterior post = nix_posterior(stats, std::get<NixPrior>(prob.mode));
        ph.log_emit =
            nix_expected_log_emit(prob.obs, post.kappa, post.nu, post.mu, post.nu_tau_sq);
    }
    return ph;
}

PseudoHmm vb_pseudo(const Problem& prob, const std::vector<double>& gamma,
                    const std::vector<double>& xi) {
    const int K = prob.K(), n = prob.n();
    PseudoHmm ph;
    ph.K = K;
    ph.log_initial = log_initial_of(prob);
    ph.log_trans = digamma_log_trans(prob.prior, xi);
    if (const auto* fixed = std::get_if<FixedEmissions>(&prob.mode)) {
        ph.log_emit = normal_log_emit(prob.obs, fixed->mu, fixed->sigma_sq);
    } else {
        const NixPrior& nix = std::get<NixPrior>(prob.mode);
        std::vector<double> kap(K), nu(K), mu(K), nts(K);
        for (int k = 0; k < K; ++k) {
            double g = 0.0, gx = 0.0, gxx = 0.0;
            for (int t = 0; t < n; ++t) {
                const double w = gamma[static_cast<std::size_t>(t) * K + k];
                g += w;
                gx += w * prob.obs[t];
                gxx += w * prob.obs[t] * prob.obs[t];
            }
            kap[k] = nix.kappa0 + g;
            nu[k] = nix.nu0 + g;
            const double xbar = g > 0.0 ? gx / g : nix.xi[k];
            mu[k] = (nix.kappa0 * nix.xi[k] + g * xbar) / kap[k];
            double ss = gxx - g * xbar * xbar;
            if (ss < 0.0) ss = 0.0;
            nts[k] = nix.nu0 * nix.tau0_sq + ss +
                     nix.kappa0 * g / kap[k] * (xbar - nix.xi[k]) * (xbar - nix.xi[k]);
        }
        ph.log_emit = nix_expected_log_emit(prob.obs, kap, nu, mu, nts);
    }
    return ph;
}

HmmParams em_mstep(const Problem& prob, const std::vector<double>& gamma,
                   const std::vector<double>& xi, bool flat_prior) {
    const int K = prob.K(), n = prob.n();
    if (!flat_prior && prob.prior.min_alpha() <= 1.0)
        throw ModeInfeasibleError("Bayesian EM update requires M*q_lj > 1 everywhere");
    HmmParams out;
    out.K = K;
    out.initial = prob.initial;
    out.trans.assign(static_cast<std::size_t>(K) * K, 0.0);
    for (int l = 0; l < K; ++l) {
        double denom = 0.0;
        int support = 0;
        for (int j = 0; j < K; ++j) {
            const double a = flat_prior ? 1.0 : prob.prior.alpha(l, j);
            if (a <= 0.0)
                continue;
            denom += xi[static_cast<std::size_t>(l) * K + j] + a - 1.0;
            support += 1;
        }
        if (!(denom > 0.0)) {
            // unreachable row: fall back to uniform over the support
            for (int j = 0; j < K; ++j)
                if (flat_prior || prob.prior.alpha(l, j) > 0.0)
                    out.trans[static_cast<std::size_t>(l) * K + j] = 1.0 / support;
            continue;
        }
        for (int j = 0; j < K; ++j) {
            const double a = flat_prior ? 1.0 : prob.prior.alpha(l, j);
            if (a <= 0.0)
                continue;
            out.trans[static_cast<std::size_t>(l) * K + j] =
                (xi[static_cast<std::size_t>(l) * K + j] + a - 1.0) / denom;
        }
    }
    if (const auto* fixed = std::get_if<FixedEmissions>(&prob.mode)) {
        out.mu = fixed->mu;
        out.sigma_sq = fixed->sigma_sq;
        return out;
    }
    const NixPrior& nix = std::get<NixPrior>(prob.mode);
    out.mu.resize(K);
    out.sigma_sq.resize(K);
    for (int k = 0; k < K; ++k) {
        double g = 0.0, gx = 0.0, gxx = 0.0;
        for (int t = 0; t < n; ++t) {
            const double w = gamma[static_cast<std::size_t>(t) * K + k];
            g += w;
            gx += w * prob.obs[t];
            gxx += w * prob.obs[t] * prob.obs[t];
        }
        if (flat_prior) {
            if (g < 1e-12) {
                out.mu[k] = 0.0;
                out.sigma_sq[k] = 1.0;
                continue;
            }
            const double mu = gx / g;
            out.mu[k] = mu;
            out.sigma_sq[k] = std::max((gxx - g * mu * mu) / g, 1e-12);
        } else {
            const double mu = (gx + nix.xi[k] * nix.kappa0) / (g + nix.kappa0);
            out.mu[k] = mu;
            const double rss = gxx - 2.0 * mu * gx + g * mu * mu;
            out.sigma_sq[k] =
                (nix.nu0 * nix.tau0_sq + rss +
                 (mu - nix.xi[k]) * (mu - nix.xi[k]) * nix.kappa0) /
                (g + nix.nu0 + 3.0);
        }
    }
    return out;
}

double theta_log_posterior(const Problem& prob, const HmmParams& params,
                           bool flat_prior) {
    const double loglik =
        forward_backward(PseudoHmm::from_params(params, prob.obs)).log_evidence;
    if (flat_prior)
        return loglik;
    double lp = 0.0;
    const int K = prob.K();
    for (int l = 0; l < K; ++l) {
        double alpha_l = 0.0;
        for (int j = 0; j < K; ++j) {
            const double a = prob.prior.alpha(l, j);
            if (a <= 0.0)
                continue;
            alpha_l += a;
            lp -= log_gamma(a);
            if (a != 1.0)
                lp += (a - 1.0) * std::log(params.p(l, j));
        }
        lp += log_gamma(alpha_l);
    }
    if (const auto* nix = std::get_if<NixPrior>(&prob.mode)) {
        for (int k = 0; k < K; ++k) {
            const double s2 = params.sigma_sq[k], mu = params.mu[k];
            lp += -0.5 * (kLog2Pi + std::log(s2 / nix->kappa0)) -
                  nix->kappa0 * (mu - nix->xi[k]) * (mu - nix->xi[k]) / (2.0 * s2);
            lp += 0.5 * nix->nu0 * std::log(0.5 * nix->nu0 * nix->tau0_sq) -
                  log_gamma(0.5 * nix->nu0) -
                  (1.0 + 0.5 * nix->nu0) * std::log(s2) -
                  nix->nu0 * nix->tau0_sq / (2.0 * s2);
        }
    }
    return loglik + lp;
}

void init_soft_counts(const StatePath& path, int K, std::vector<double>& gamma,
                      std::vector<double>& xi) {
    const int n = static_cast<int>(path.size());
    gamma.assign(static_cast<std::size_t>(n) * K, 0.0);
    xi.assign(static_cast<std::size_t>(K) * K, 0.0);
    for (int t = 0; t < n; ++t)
        gamma[static_cast<std::size_t>(t) * K + path[t]] = 1.0;
    for (int t = 0; t + 1 < n; ++t)
        xi[static_cast<std::size_t>(path[t]) * K + path[t + 1]] += 1.0;
}

namespace {

// Common loop for segmentation EM / MM: re-score a path, run Viterbi,
// repeat until the path repeats.  `fixed_point_only` distinguishes
// convergence from a longer cycle.
template <typename StepFn>
RunTrace path_iteration(const Problem& prob, const StatePath& init,
                        const SegmenterConfig& cfg, StepFn make_pseudo,
                        bool pick_best_on_cycle) {
    cfg.validate();
    RunTrace trace;
    StatePath path = init;
    PathStats stats = path_stats(path, prob.obs, prob.K());
    double score = log_joint(stats, prob.prior, prob.mode, prob.initial);
    trace.scores.push_back(score);

    std::vector<StatePath> history{path};
    std::vector<double> history_scores{score};

    for (int it = 1; it <= cfg.max_iters; ++it) {
        trace.iterations = it;
        const PseudoHmm pseudo = make_pseudo(stats);
        StatePath next = viterbi(pseudo);
        if (next == path) {
            trace.converged = true;
            break;
        }
        const auto seen = std::find(history.begin(), history.end(), next);
        path = std::move(next);
        stats = path_stats(path, prob.obs, prob.K());
        score = log_joint(stats, prob.prior, prob.mode, prob.initial);
        trace.scores.push_back(score);
        if (seen != history.end()) {
            // cycle: keep the best-scoring member
            trace.converged = true;
            if (pick_best_on_cycle) {
                std::size_t first = static_cast<std::size_t>(seen - history.begin());
                double best = score;
                StatePath best_path = path;
                for (std::size_t i = first; i < history.size(); ++i)
                    if (history_scores[i] > best) {
                        best = history_scores[i];
                        best_path = history[i];
                    }
                path = std::move(best_path);
                score = best;
            }
            break;
        }
        history.push_back(path);
        history_scores.push_back(score);
    }
    trace.path = std::move(path);
    trace.final_log_joint = score;
    return trace;
}

}  // namespace

RunTrace seg_em(const Problem& prob, const StatePath& init, const SegmenterConfig& cfg) {
    return path_iteration(
        prob, init, cfg, [&](const PathStats& st) { return seg_em_pseudo(prob, st); },
        /*pick_best_on_cycle=*/false);
}

RunTrace seg_mm(const Problem& prob, const StatePath& init, const SegmenterConfig& cfg) {
    return path_iteration(
        prob, init, cfg,
        [&](const PathStats& st) {
            return PseudoHmm::from_params(
                posterior_modes(st, prob.prior, prob.mode, prob.initial), prob.obs);
        },
        /*pick_best_on_cycle=*/true);
}

RunTrace bayes_em(const Problem& prob, const StatePath& init, const SegmenterConfig& cfg,
                  bool flat_prior, HmmParams* final_params) {
    cfg.validate();
    RunTrace trace;
    std::vector<double> gamma, xi;
    init_soft_counts(init, prob.K(), gamma, xi);
    HmmParams params = em_mstep(prob, gamma, xi, flat_prior);
    double score = theta_log_posterior(prob, params, flat_prior);
    trace.scores.push_back(score);
    for (int it = 1; it <= cfg.max_iters; ++it) {
        trace.iterations = it;
        const PosteriorStats stats =
            forward_backward(PseudoHmm::from_params(params, prob.obs));
        params = em_mstep(prob, stats.gamma, stats.xi, flat_prior);
        const double next = theta_log_posterior(prob, params, flat_prior);
        trace.scores.push_back(next);
        const bool done = std::abs(next - score) < cfg.tol;
        score = next;
        if (done) {
            trace.converged = true;
            break;
        }
    }
    trace.path = viterbi(PseudoHmm::from_params(params, prob.obs));
    trace.final_log_joint = prob.score(trace.path);
    if (final_params)
        *final_params = std::move(params);
    return trace;
}

RunTrace variational_bayes(const Problem& prob, const StatePath& init,
                           const SegmenterConfig& cfg) {
    cfg.validate();
    RunTrace trace;
    std::vector<double> gamma, xi;
    init_soft_counts(init, prob.K(), gamma, xi);
    StatePath path;
    for (int it = 1; it <= cfg.max_iters; ++it) {
        trace.iterations = it;
        const PseudoHmm pseudo = vb_pseudo(prob, gamma, xi);
        const PosteriorStats stats = forward_backward(pseudo);
        double delta = 0.0;
        for (std::size_t i = 0; i < gamma.size(); ++i)
            delta = std::max(delta, std::abs(stats.gamma[i] - gamma[i]));
        gamma = stats.gamma;
        xi = stats.xi;
        path = viterbi(pseudo);
        trace.scores.push_back(prob.score(path));
        if (delta < cfg.tol) {
            trace.converged = true;
            break;
        }
    }
    trace.path = std::move(path);
    trace.final_log_joint = trace.scores.back();
    return trace;
}

namespace {

// Incremental single-site evaluator for ICM.  Count changes are integer
// (exactly revertible); moment sums are recomputed as candidate values so
// evaluation never mutates state.
class IcmEvaluator {
  public:
    IcmEvaluator(const Problem& prob, const StatePath& path)
        : prob_(prob), path_(path), stats_(path_stats(path, prob.obs, prob.K())) {}

    const StatePath& path() const { return path_; }

    // delta of log_joint for setting site t to state b (can be -inf)
    double delta(int t, int b) const {
        const int a = path_[t];
        if (a == b)
            return 0.0;
        const int n = static_cast<int>(path_.size());
        double before = 0.0, after = 0.0;

        // transition cells touched, with their count deltas
        struct CellDelta { int l, j, d; };
        CellDelta cells[4];
        int ncells = 0;
        if (t > 0) {
            cells[ncells++] = {path_[t - 1], a, -1};
            cells[ncells++] = {path_[t - 1], b, +1};
        }
        if (t + 1 < n) {
            cells[ncells++] = {a, path_[t + 1], -1};
            cells[ncells++] = {b, path_[t + 1], +1};
        }
        // merge duplicates (e.g. self-transitions)
        for (int i = 0; i < ncells; ++i)
            for (int j = i + 1; j < ncells; ++j)
                if (cells[i].l == cells[j].l && cells[i].j == cells[j].j) {
                    cells[i].d += cells[j].d;
                    cells[j].d = 0;
                }
        for (int i = 0; i < ncells; ++i) {
            if (cells[i].d == 0)
                continue;
            const double alpha = prob_.prior.alpha(cells[i].l, cells[i].j);
            const long c = stats_.c(cells[i].l, cells[i].j);
            if (alpha <= 0.0) {
                if (c + cells[i].d > 0)
                    return kNegInf;  // structural zero
                continue;
            }
            before += log_gamma(alpha + static_cast<double>(c));
            after += log_gamma(alpha + static_cast<double>(c + cells[i].d));
        }
        // row totals change only via the outgoing edge
        if (t + 1 < n) {
            const double alpha_a = row_alpha(a), alpha_b = row_alpha(b);
            before += -log_gamma(alpha_a + static_cast<double>(stats_.row_totals[a])) -
                      log_gamma(alpha_b + static_cast<double>(stats_.row_totals[b]));
            after += -log_gamma(alpha_a + static_cast<double>(stats_.row_totals[a] - 1)) -
                     log_gamma(alpha_b + static_cast<double>(stats_.row_totals[b] + 1));
        }
        if (t == 0) {
            if (!(prob_.initial[b] > 0.0))
                return kNegInf;
            before += std::log(prob_.initial[a]);
            after += std::log(prob_.initial[b]);
        }
        const double x = prob_.obs[t];
        before += emission_term(a, stats_.m[a], stats_.sum[a], stats_.sum_sq[a]) +
                  emission_term(b, stats_.m[b], stats_.sum[b], stats_.sum_sq[b]);
        after += emission_term(a, stats_.m[a] - 1, stats_.sum[a] - x,
                               stats_.sum_sq[a] - x * x) +
                 emission_term(b, stats_.m[b] + 1, stats_.sum[b] + x,
                               stats_.sum_sq[b] + x * x);
        return after - before;
    }

    void apply(int t, int b) {
        const int a = path_[t];
        const int n = static_cast<int>(path_.size());
        const double x = prob_.obs[t];
        if (t > 0) {
            add_count(path_[t - 1], a, -1);
            add_count(path_[t - 1], b, +1);
        }
        if (t + 1 < n) {
            add_count(a, path_[t + 1], -1);
            add_count(b, path_[t + 1], +1);
            stats_.row_totals[a] -= 1;
            stats_.row_totals[b] += 1;
        }
        stats_.m[a] -= 1;
        stats_.m[b] += 1;
        stats_.sum[a] -= x;
        stats_.sum[b] += x;
        stats_.sum_sq[a] -= x * x;
        stats_.sum_sq[b] += x * x;
        path_[t] = b;
        if (t == 0)
            stats_.first_state = b;
    }

  private:
    double row_alpha(int l) const {
        double s = 0.0;
        for (int j = 0; j < prob_.K(); ++j)
            s += prob_.prior.alpha(l, j);
        return s;
    }

    void add_count(int l, int j, int d) {
        stats_.counts[static_cast<std::size_t>(l) * prob_.K() + j] += d;
    }

    double emission_term(int k, long m, double sum, double sum_sq) const {
        if (const auto* fixed = std::get_if<FixedEmissions>(&prob_.mode)) {
            if (m == 0)
                return 0.0;
            const double mu = fixed->mu[k], s2 = fixed->sigma_sq[k];
            const double rss = sum_sq - 2.0 * mu * sum + static_cast<double>(m) * mu * mu;
            return -0.5 * static_cast<double>(m) * (kLog2Pi + std::log(s2)) -
                   rss / (2.0 * s2);
        }
        const NixPrior& nix = std::get<NixPrior>(prob_.mode);
        const double mk = static_cast<double>(m);
        const double kap = nix.kappa0 + mk;
        const double nu = nix.nu0 + mk;
        double nts = nix.nu0 * nix.tau0_sq;
        if (m > 1) {
            const double css = sum_sq - sum * sum / mk;
            nts += css > 0.0 ? css : 0.0;
        }
        if (m > 0) {
            const double xbar = sum / mk;
            nts += nix.kappa0 * mk / kap * (xbar - nix.xi[k]) * (xbar - nix.xi[k]);
        }
        return log_gamma(0.5 * nu) - log_gamma(0.5 * nix.nu0) +
               0.5 * std::log(nix.kappa0 / kap) +
               0.5 * nix.nu0 * std::log(nix.nu0 * nix.tau0_sq) -
               0.5 * nu * std::log(nts) -
               0.5 * mk * std::log(3.14159265358979323846);
    }

    const Problem& prob_;
    StatePath path_;
    PathStats stats_;
};

}  // namespace

RunTrace icm(const Problem& prob, const StatePath& init, const SegmenterConfig& cfg) {
    cfg.validate();
    RunTrace trace;
    IcmEvaluator eval(prob, init);
    const int n = static_cast<int>(init.size());
    const int K = prob.K();
    double score = prob.score(init);
    trace.scores.push_back(score);
    for (int sweep = 1; sweep <= cfg.max_iters; ++sweep) {
        trace.iterations = sweep;
        bool changed = false;
        for (int t = 0; t < n; ++t) {
            int best_k = eval.path()[t];
            double best_delta = 0.0;
            for (int k = 0; k < K; ++k) {
                if (k == eval.path()[t])
                    continue;
                const double d = eval.delta(t, k);
                if (d > best_delta || (d == best_delta && k < best_k)) {
                    best_delta = d;
                    best_k = k;
                }
            }
            if (best_k != eval.path()[t]) {
                eval.apply(t, best_k);
                score += best_delta;
                trace.scores.push_back(score);
                changed = true;
            }
        }
        if (!changed) {
            trace.converged = true;
            break;
        }
    }
    trace.path = eval.path();
    trace.final_log_joint = score;
    return trace;
}

RunTrace simulated_annealing(const Problem& prob, const StatePath& init,
                             const SegmenterConfig& cfg) {
    cfg.validate();
    if (cfg.sa_schedule.empty())
        throw std::domain_error("simulated_annealing: empty schedule");
    constexpr int kMaxRejections = 10000;

    RunTrace trace;
    Rng rng(cfg.seed);
    StatePath path = init;
    PathStats stats = path_stats(path, prob.obs, prob.K());
    double cur_lj = log_joint(stats, prob.prior, prob.mode, prob.initial);
    StatePath best_path = path;
    double best_lj = cur_lj;
    trace.scores.push_back(best_lj);

    for (const auto& [beta, samples] : cfg.sa_schedule) {
        double cur_tj = log_tempered_joint(beta, stats, prob.prior, prob.mode,
                                           prob.initial);
        for (int s = 0; s < samples; ++s) {
            trace.iterations += 1;
            for (int rejections = 0; rejections < kMaxRejections; ++rejections) {
                const HmmParams theta = tempered_theta_sample(
                    beta, stats, prob.prior, prob.mode, prob.initial, rng);
                const StatePath cand =
                    backward_sample(tempered_pseudo(theta, prob.obs, beta), rng);
                const PathStats cstats = path_stats(cand, prob.obs, prob.K());
                const double cand_lj =
                    log_joint(cstats, prob.prior, prob.mode, prob.initial);
                const double cand_tj = log_tempered_joint(beta, cstats, prob.prior,
                                                          prob.mode, prob.initial);
                const double log_acc = beta * (cand_lj - cur_lj) - (cand_tj - cur_tj);
                if (log_acc >= 0.0 || std::log(rng.next_open()) < log_acc) {
                    path = cand;
                    stats = cstats;
                    cur_lj = cand_lj;
                    cur_tj = cand_tj;
                    break;
                }
            }
            if (cur_lj > best_lj) {
                best_lj = cur_lj;
                best_path = path;
            }
            trace.scores.push_back(best_lj);
        }
    }
    trace.converged = true;
    trace.path = std::move(best_path);
    trace.final_log_joint = best_lj;
    return trace;
}

}  // namespace bhmm
