#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "bhmm/errors.hpp"
#include "bhmm/hmm.hpp"
#include "bhmm/special.hpp"
#include "oracles.hpp"

using namespace bhmm;

namespace {

PseudoHmm random_pseudo(int K, int n, std::uint64_t seed, double lo = -3.0,
                        double hi = 0.5) {
    Rng rng(seed);
    PseudoHmm ph;
    ph.K = K;
    ph.log_initial.resize(K);
    ph.log_trans.resize(static_cast<std::size_t>(K) * K);
    ph.log_emit.resize(static_cast<std::size_t>(n) * K);
    auto u = [&] { return lo + (hi - lo) * rng.next_double(); };
    for (auto& v : ph.log_initial) v = u();
    for (auto& v : ph.log_trans) v = u();
    for (auto& v : ph.log_emit) v = u();
    return ph;
}

}  // namespace

TEST_CASE("viterbi: K=1 gives the constant path") {
    PseudoHmm ph;
    ph.K = 1;
    ph.log_initial = {0.0};
    ph.log_trans = {-0.2};
    ph.log_emit.assign(6, -1.0);
    CHECK(viterbi(ph) == StatePath(6, 0));
}

TEST_CASE("viterbi matches exhaustive enumeration (K=2, n=8)") {
    for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
        const PseudoHmm ph = random_pseudo(2, 8, seed);
        const StatePath v = viterbi(ph);
        double best = -1e300;
        StatePath arg;
        oracles::for_each_path(2, 8, [&](const StatePath& y) {
            const double s = path_log_score(ph, y);
            if (s > best) {
                best = s;
                arg = y;
            }
        });
        CHECK(path_log_score(ph, v) == doctest::Approx(best).epsilon(1e-12));
        CHECK(v == arg);
    }
}

TEST_CASE("viterbi: uniform transitions reduce to pointwise argmax") {
    const int K = 3, n = 7;
    PseudoHmm ph = random_pseudo(K, n, 99);
    for (auto& v : ph.log_initial) v = std::log(1.0 / K);
    for (auto& v : ph.log_trans) v = std::log(1.0 / K);
    const StatePath v = viterbi(ph);
    for (int t = 0; t < n; ++t) {
        int arg = 0;
        for (int k = 1; k < K; ++k)
            if (ph.le(t, k) > ph.le(t, arg))
                arg = k;
        CHECK(v[t] == arg);
    }
}

TEST_CASE("viterbi tie-break picks the lowest state index") {
    PseudoHmm ph;
    ph.K = 2;
    ph.log_initial = {0.0, 0.0};
    ph.log_trans = {0.0, 0.0, 0.0, 0.0};
    ph.log_emit.assign(8, -1.0);  // n=4, all states equal
    CHECK(viterbi(ph) == StatePath(4, 0));
}

TEST_CASE("viterbi: all -inf column is an infeasible-path error") {
    PseudoHmm ph = random_pseudo(2, 4, 7);
    const double ninf = -std::numeric_limits<double>::infinity();
    ph.log_emit[2 * 2 + 0] = ninf;
    ph.log_emit[2 * 2 + 1] = ninf;
    CHECK_THROWS_AS(forward_backward(ph), InfeasiblePathError);
    CHECK_THROWS_AS(viterbi(ph), InfeasiblePathError);
}

TEST_CASE("forward_backward matches enumeration (K<=3, n<=10)") {
    for (const auto& [K, n, seed] :
         {std::tuple{2, 6, 17u}, std::tuple{3, 5, 18u}, std::tuple{2, 10, 19u}}) {
        const PseudoHmm ph = random_pseudo(K, n, seed);
        const PosteriorStats st = forward_backward(ph);

        std::vector<double> scores;
        std::vector<StatePath> paths;
        oracles::for_each_path(K, n, [&](const StatePath& y) {
            scores.push_back(path_log_score(ph, y));
            paths.push_back(y);
        });
        const double logz = oracles::naive_log_sum_exp(scores);
        CHECK(std::abs(st.log_evidence - logz) < 1e-8);

        std::vector<double> gamma(n * K, 0.0), xi(K * K, 0.0);
        for (std::size_t i = 0; i < paths.size(); ++i) {
            const double w = std::exp(scores[i] - logz);
            for (int t = 0; t < n; ++t)
                gamma[t * K + paths[i][t]] += w;
            for (int t = 0; t + 1 < n; ++t)
                xi[paths[i][t] * K + paths[i][t + 1]] += w;
        }
        for (int t = 0; t < n; ++t)
            for (int k = 0; k < K; ++k)
                CHECK(st.g(t, k) == doctest::Approx(gamma[t * K + k]).epsilon(1e-9));
        for (int i = 0; i < K * K; ++i)
            CHECK(st.xi[i] == doctest::Approx(xi[i]).epsilon(1e-9));
    }
}

TEST_CASE("forward_backward invariants: gamma rows sum to 1, xi consistent") {
    const int K = 3, n = 40;
    const PseudoHmm ph = random_pseudo(K, n, 23);
    const PosteriorStats st = forward_backward(ph);
    for (int t = 0; t < n; ++t) {
        double s = 0.0;
        for (int k = 0; k < K; ++k)
            s += st.g(t, k);
        CHECK(s == doctest::Approx(1.0).epsilon(1e-10));
    }
    for (int l = 0; l < K; ++l) {
        double row = 0.0, occ = 0.0;
        for (int j = 0; j < K; ++j)
            row += st.xi[l * K + j];
        for (int t = 0; t + 1 < n; ++t)
            occ += st.g(t, l);
        CHECK(row == doctest::Approx(occ).epsilon(1e-8));
    }
}

TEST_CASE("normalized-rescaling invariance (u~, h~ transform) and site shifts") {
    // Normalizing a transition row while scaling the compensating emission
    // column leaves every path weight unchanged; a per-site shift moves
    // only the evidence.
    const int K = 2, n = 6;
    const PseudoHmm ph = random_pseudo(K, n, 31);
    const PosteriorStats st = forward_backward(ph);
    const StatePath v = viterbi(ph);

    PseudoHmm mod = ph;
    const double c = std::log(7.0);
    for (int j = 0; j < K; ++j)
        mod.log_trans[0 * K + j] += c;  // scale row 0 by 7
    for (int t = 0; t + 1 < n; ++t)
        mod.log_emit[t * K + 0] -= c;  // compensate h_0 at t <= n-1
    const PosteriorStats st2 = forward_backward(mod);
    for (std::size_t i = 0; i < st.gamma.size(); ++i)
        CHECK(st2.gamma[i] == doctest::Approx(st.gamma[i]).epsilon(1e-10));
    for (std::size_t i = 0; i < st.xi.size(); ++i)
        CHECK(st2.xi[i] == doctest::Approx(st.xi[i]).epsilon(1e-10));
    CHECK(viterbi(mod) == v);

    PseudoHmm site = ph;
    double shift_sum = 0.0;
    for (int t = 0; t < n; ++t) {
        const double s = 0.3 * (t + 1);
        shift_sum += s;
        for (int k = 0; k < K; ++k)
            site.log_emit[t * K + k] += s;
    }
    const PosteriorStats st3 = forward_backward(site);
    for (std::size_t i = 0; i < st.gamma.size(); ++i)
        CHECK(st3.gamma[i] == doctest::Approx(st.gamma[i]).epsilon(1e-10));
    CHECK(st3.log_evidence ==
          doctest::Approx(st.log_evidence + shift_sum).epsilon(1e-10));
    CHECK(viterbi(site) == v);
}

TEST_CASE("pmap_path: one-hot rows and enumerated marginals") {
    PosteriorStats st;
    st.K = 3;
    st.gamma = {0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0};
    CHECK(pmap_path(st) == StatePath{1, 0, 2});

    const PseudoHmm ph = random_pseudo(2, 6, 47);
    const PosteriorStats fb = forward_backward(ph);
    std::vector<double> scores;
    std::vector<StatePath> paths;
    oracles::for_each_path(2, 6, [&](const StatePath& y) {
        scores.push_back(path_log_score(ph, y));
        paths.push_back(y);
    });
    const double logz = oracles::naive_log_sum_exp(scores);
    std::vector<double> gamma(6 * 2, 0.0);
    for (std::size_t i = 0; i < paths.size(); ++i)
        for (int t = 0; t < 6; ++t)
            gamma[t * 2 + paths[i][t]] += std::exp(scores[i] - logz);
    const StatePath pm = pmap_path(fb);
    for (int t = 0; t < 6; ++t)
        CHECK(pm[t] == (gamma[t * 2 + 1] > gamma[t * 2 + 0] ? 1 : 0));
}

TEST_CASE("pmap tie row picks state 0") {
    PosteriorStats st;
    st.K = 2;
    st.gamma = {0.5, 0.5};
    CHECK(pmap_path(st) == StatePath{0});
}

TEST_CASE("backward_sample: deterministic pseudo yields the single path") {
    const double ninf = -std::numeric_limits<double>::infinity();
    PseudoHmm ph;
    ph.K = 2;
    ph.log_initial = {0.0, ninf};
    ph.log_trans = {ninf, 0.0, 0.0, ninf};  // forced alternation
    ph.log_emit.assign(8, 0.0);
    Rng rng(5);
    for (int i = 0; i < 20; ++i)
        CHECK(backward_sample(ph, rng) == StatePath{0, 1, 0, 1});
}

TEST_CASE("backward_sample matches enumerated path law (chi^2, K=2, n=4)") {
    const int K = 2, n = 4, N = 100000;
    const PseudoHmm ph = random_pseudo(K, n, 61);
    std::vector<double> scores;
    oracles::for_each_path(K, n, [&](const StatePath& y) {
        scores.push_back(path_log_score(ph, y));
    });
    const double logz = oracles::naive_log_sum_exp(scores);
    std::vector<double> prob;
    for (double s : scores)
        prob.push_back(std::exp(s - logz));

    Rng rng(777);
    std::vector<int> counts(prob.size(), 0);
    for (int i = 0; i < N; ++i) {
        const StatePath y = backward_sample(ph, rng);
        int idx = 0;
        for (int t = 0; t < n; ++t)
            idx = idx * K + y[t];
        counts[idx] += 1;
    }
    double chisq = 0.0;
    for (std::size_t i = 0; i < prob.size(); ++i) {
        const double e = N * prob[i];
        chisq += (counts[i] - e) * (counts[i] - e) / e;
    }
    // 15 dof, upper 1e-3 quantile ~ 37.7
    CHECK(chisq < 37.7);
}

TEST_CASE("backward_sample is seed-deterministic") {
    const PseudoHmm ph = random_pseudo(3, 20, 3);
    Rng a(1), b(1), c(2);
    const StatePath pa = backward_sample(ph, a);
    CHECK(pa == backward_sample(ph, b));
    bool differs = false;
    Rng c2(2);
    for (int i = 0; i < 10 && !differs; ++i)
        differs = backward_sample(ph, c2) != pa;
    CHECK(differs);
}

TEST_CASE("viterbi score dominates sampled paths") {
    const PseudoHmm ph = random_pseudo(3, 12, 8);
    const double vscore = path_log_score(ph, viterbi(ph));
    Rng rng(4);
    for (int i = 0; i < 1000; ++i)
        CHECK(path_log_score(ph, backward_sample(ph, rng)) <= vscore + 1e-12);
}

TEST_CASE("generate_data: identity transitions freeze the chain; seeds reproduce") {
    HmmParams hp;
    hp.K = 2;
    hp.initial = {0.5, 0.5};
    hp.trans = {1.0, 0.0, 0.0, 1.0};
    hp.mu = {-1.0, 1.0};
    hp.sigma_sq = {0.25, 0.25};
    Rng rng(10);
    const auto [obs, truth] = generate_data(hp, 50, rng);
    for (int t = 1; t < 50; ++t)
        CHECK(truth[t] == truth[0]);
    Rng r2(10);
    const auto [obs2, truth2] = generate_data(hp, 50, r2);
    CHECK(obs == obs2);
    CHECK(truth == truth2);
}

TEST_CASE("generate_data: paper-style transition frequencies within 4 s.e.") {
    HmmParams hp;
    hp.K = 4;
    hp.initial.assign(4, 0.25);
    hp.trans.assign(16, 0.4 / 3.0);
    for (int l = 0; l < 4; ++l)
        hp.trans[l * 4 + l] = 0.6;
    hp.mu = {-0.7, 0.0, 0.7, 1.4};
    hp.sigma_sq.assign(4, 0.25);
    Rng rng(2024);
    const auto [obs, truth] = generate_data(hp, 600, rng);
    int self = 0;
    for (int t = 1; t < 600; ++t)
        self += truth[t] == truth[t - 1];
    const double frac = self / 599.0;
    CHECK(std::abs(frac - 0.6) < 4.0 * std::sqrt(0.6 * 0.4 / 599.0));
}
