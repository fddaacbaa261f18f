#include "bhmm/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "bhmm/errors.hpp"

namespace bhmm {

namespace {

using nlohmann::json;

// Dir(a,...,a) row concentrations for the 12 random protocol matrices.
constexpr double kProtocolAlphas[] = {0.3, 0.5, 0.7, 0.8, 0.9, 1.0,
                                      1.1, 1.2, 1.3, 1.5, 1.7, 1.9};
constexpr int kRealizationsPerMatrix = 3;

std::string fmt_full(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::vector<double> parse_matrix(const json& j, int K, const std::string& what) {
    std::vector<double> m;
    m.reserve(static_cast<std::size_t>(K) * K);
    if (!j.is_array() || static_cast<int>(j.size()) != K)
        throw std::runtime_error("config: " + what + " must be a " +
                                 std::to_string(K) + "x" + std::to_string(K) +
                                 " matrix");
    for (const auto& row : j) {
        if (!row.is_array() || static_cast<int>(row.size()) != K)
            throw std::runtime_error("config: ragged matrix in " + what);
        for (const auto& v : row)
            m.push_back(v.get<double>());
    }
    return m;
}

// Stationary row vector of a row-stochastic matrix by power iteration;
// returns false (uniform fallback) when the residual does not vanish.
bool stationary_distribution(const std::vector<double>& trans, int K,
                             std::vector<double>& pi) {
    pi.assign(K, 1.0 / K);
    std::vector<double> next(K);
    for (int it = 0; it < 20000; ++it) {
        for (int j = 0; j < K; ++j) {
            double s = 0.0;
            for (int l = 0; l < K; ++l)
                s += pi[l] * trans[static_cast<std::size_t>(l) * K + j];
            next[j] = s;
        }
        double norm = 0.0, resid = 0.0;
        for (int j = 0; j < K; ++j) norm += next[j];
        for (int j = 0; j < K; ++j) {
            next[j] /= norm;
            resid += std::abs(next[j] - pi[j]);
        }
        pi = next;
        if (resid < 1e-12)
            return true;
    }
    pi.assign(K, 1.0 / K);
    return false;
}

StatePath markov_realization(const std::vector<double>& trans,
                             std::span<const double> start, int K, int n, Rng& rng) {
    StatePath y(n);
    y[0] = sample_categorical(rng, start);
    for (int t = 1; t < n; ++t)
        y[t] = sample_categorical(
            rng, std::span<const double>(trans).subspan(
                     static_cast<std::size_t>(y[t - 1]) * K, K));
    return y;
}

struct MethodOutcome {
    bool feasible = true;
    double best = -std::numeric_limits<double>::infinity();
    StatePath best_path;
    int distinct = 0;
    std::vector<double> per_init;
    double wall = 0.0;
    std::string note;
};

bool wants_precheck_na(const std::string& method, const DirichletPrior& prior) {
    // Mode-style updates need M*q_lj > 1 everywhere; such cells render as 'na'.
    return (method == "smm" || method == "bem") && !(prior.min_alpha() > 1.0);
}

MethodOutcome run_method_over_inits(const std::string& method, const Problem& prob,
                                    const std::vector<StatePath>& inits,
                                    const SegmenterConfig& base_cfg,
                                    std::uint64_t sa_cell_seed) {
    MethodOutcome out;
    const auto t0 = std::chrono::steady_clock::now();
    if (wants_precheck_na(method, prob.prior)) {
        out.feasible = false;
        out.note = "M*q_lj <= 1";
        return out;
    }
    try {
        std::set<StatePath> outputs;
        auto record = [&](const RunTrace& tr) {
            out.per_init.push_back(tr.final_log_joint);
            outputs.insert(tr.path);
            if (tr.final_log_joint > out.best) {
                out.best = tr.final_log_joint;
                out.best_path = tr.path;
            }
        };
        if (method == "sa") {
            SegmenterConfig cfg = base_cfg;
            cfg.seed = sa_cell_seed;
            // one initial sequence: the pointwise-max-emission path
            record(simulated_annealing(prob, inits.at(inits.size() - 2), cfg));
        } else {
            for (const StatePath& init : inits) {
                if (method == "sem")
                    record(seg_em(prob, init, base_cfg));
                else if (method == "smm")
                    record(seg_mm(prob, init, base_cfg));
                else if (method == "icm")
                    record(icm(prob, init, base_cfg));
                else if (method == "vb")
                    record(variational_bayes(prob, init, base_cfg));
                else if (method == "bem")
                    record(bayes_em(prob, init, base_cfg, /*flat_prior=*/false));
                else if (method == "em")
                    record(bayes_em(prob, init, base_cfg, /*flat_prior=*/true));
                else
                    throw std::runtime_error("unknown method: " + method);
            }
        }
        out.distinct = static_cast<int>(outputs.size());
    } catch (const ModeInfeasibleError& e) {
        out = MethodOutcome{};
        out.feasible = false;
        out.note = e.what();
    } catch (const InfeasibleTemperatureError& e) {
        out = MethodOutcome{};
        out.feasible = false;
        out.note = e.what();
    } catch (const InfeasiblePathError& e) {
        out = MethodOutcome{};
        out.feasible = false;
        out.note = e.what();
    }
    out.wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                   .count();
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

std::string render_csv_aligned(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        return "";
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        auto cells = split_csv_line(line);
        // floats rendered at 2 decimals, everything else verbatim
        if (!rows.empty()) {
            for (auto& c : cells) {
                char* end = nullptr;
                const double v = std::strtod(c.c_str(), &end);
                if (end && *end == '\0' && c.find('.') != std::string::npos)
                    c = fmt2(v);
            }
        }
        rows.push_back(std::move(cells));
    }
    std::vector<std::size_t> width;
    for (const auto& r : rows)
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (width.size() <= i)
                width.resize(i + 1, 0);
            width[i] = std::max(width[i], r[i].size());
        }
    std::ostringstream os;
    os << std::filesystem::path(path).filename().string() << "\n";
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) {
            os << (i ? "  " : "");
            os << std::string(width[i] - r[i].size(), ' ') << r[i];
        }
        os << "\n";
    }
    os << "\n";
    return os.str();
}

}  // namespace

void ExperimentConfig::validate() const {
    truth.validate();
    if (n < 2)
        throw std::domain_error("config: n must be >= 2");
    if (num_datasets < 1)
        throw std::domain_error("config: num_datasets must be >= 1");
    if (q_matrices.empty() || m_values.empty())
        throw std::domain_error("config: hyperparameter grid must be non-empty");
    if (methods.empty())
        throw std::domain_error("config: methods must be non-empty");
    for (const auto& qs : q_matrices) {
        DirichletPrior p{truth.K, 1.0, qs.q};
        p.validate();
    }
    if (nix_mode)
        nix.validate();
    if (max_iters < 1 || !(tol > 0.0))
        throw std::domain_error("config: bad max_iters/tol");
    if (sa_steps < 1 || sa_samples_per_beta < 1 || !(sa_beta_min >= 1.0) ||
        !(sa_beta_max >= sa_beta_min))
        throw std::domain_error("config: bad SA schedule");
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open config: " + path);
    json j;
    in >> j;

    ExperimentConfig cfg;
    const auto& model = j.at("model");
    cfg.truth.K = model.at("K").get<int>();
    cfg.truth.initial = model.at("initial").get<std::vector<double>>();
    cfg.truth.trans = parse_matrix(model.at("trans"), cfg.truth.K, "model.trans");
    cfg.truth.mu = model.at("mu").get<std::vector<double>>();
    cfg.truth.sigma_sq = model.at("sigma_sq").get<std::vector<double>>();
    cfg.n = j.at("n").get<int>();
    cfg.num_datasets = j.at("num_datasets").get<int>();
    for (const auto& q : j.at("q_matrices"))
        cfg.q_matrices.push_back(
            {q.at("id").get<std::string>(),
             parse_matrix(q.at("q"), cfg.truth.K, "q_matrices")});
    cfg.m_values = j.at("m_values").get<std::vector<double>>();
    const std::string mode = j.at("emission_mode").get<std::string>();
    if (mode == "nix") {
        cfg.nix_mode = true;
        const auto& nj = j.at("nix");
        cfg.nix.K = cfg.truth.K;
        cfg.nix.xi = nj.at("xi").get<std::vector<double>>();
        cfg.nix.kappa0 = nj.at("kappa0").get<double>();
        cfg.nix.nu0 = nj.at("nu0").get<double>();
        cfg.nix.tau0_sq = nj.at("tau0_sq").get<double>();
    } else if (mode != "fixed") {
        throw std::runtime_error("config: emission_mode must be fixed or nix");
    }
    cfg.methods = j.at("methods").get<std::vector<std::string>>();
    const auto& seeds = j.at("seeds");
    cfg.data_seed = seeds.at("data").get<std::uint64_t>();
    cfg.init_seed = seeds.at("init").get<std::uint64_t>();
    cfg.sa_seed = seeds.at("sa").get<std::uint64_t>();
    if (j.contains("sa")) {
        const auto& sa = j.at("sa");
        cfg.sa_beta_min = sa.at("beta_min").get<double>();
        cfg.sa_beta_max = sa.at("beta_max").get<double>();
        cfg.sa_steps = sa.at("steps").get<int>();
        cfg.sa_samples_per_beta = sa.at("samples_per_beta").get<int>();
    }
    cfg.max_iters = j.value("max_iters", 500);
    cfg.tol = j.value("tol", 1e-8);
    cfg.threads = j.value("threads", 0);
    cfg.validate();
    return cfg;
}

std::vector<std::vector<double>> protocol_b_matrices(const std::vector<QSpec>& qs,
                                                     int K, Rng& rng) {
    std::vector<std::vector<double>> mats;
    for (const auto& q : qs)
        mats.push_back(q.q);
    for (std::size_t i = 0; i < std::size(kProtocolAlphas); ++i) {
        Rng mrng = rng.split(static_cast<std::uint64_t>(i));
        std::vector<double> alpha(K, kProtocolAlphas[i]);
        std::vector<double> mat;
        mat.reserve(static_cast<std::size_t>(K) * K);
        for (int l = 0; l < K; ++l) {
            const std::vector<double> row = sample_dirichlet(mrng, alpha);
            mat.insert(mat.end(), row.begin(), row.end());
        }
        mats.push_back(std::move(mat));
    }
    return mats;
}

InitialSequences generate_initial_sequences(
    const std::vector<double>& emit_mu, const std::vector<double>& emit_sigma_sq,
    std::span<const double> initial, const std::vector<std::vector<double>>& b_matrices,
    const std::vector<double>& q_viterbi, std::span<const double> obs, Rng& rng) {
    const int K = static_cast<int>(emit_mu.size());
    const int n = static_cast<int>(obs.size());
    InitialSequences out;
    for (std::size_t b = 0; b < b_matrices.size(); ++b) {
        std::vector<double> pi;
        const bool ok = stationary_distribution(b_matrices[b], K, pi);
        out.stationary_fallback.push_back(!ok);
        Rng mrng = rng.split(b);
        for (int r = 0; r < kRealizationsPerMatrix; ++r)
            out.paths.push_back(markov_realization(b_matrices[b], pi, K, n, mrng));
    }
    // pointwise emission argmax
    StatePath pw(n);
    for (int t = 0; t < n; ++t) {
        int arg = 0;
        double best = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < K; ++k) {
            const double ll = -0.5 * std::log(emit_sigma_sq[k]) -
                              (obs[t] - emit_mu[k]) * (obs[t] - emit_mu[k]) /
                                  (2.0 * emit_sigma_sq[k]);
            if (ll > best) {
                best = ll;
                arg = k;
            }
        }
        pw[t] = arg;
    }
    out.paths.push_back(std::move(pw));
    // Viterbi path under the hyperparameter matrix Q
    HmmParams qparams;
    qparams.K = K;
    qparams.initial.assign(initial.begin(), initial.end());
    qparams.trans = q_viterbi;
    qparams.mu = emit_mu;
    qparams.sigma_sq = emit_sigma_sq;
    out.paths.push_back(viterbi(PseudoHmm::from_params(qparams, obs)));
    return out;
}

std::pair<StatePath, double> brute_force_map(std::span<const double> obs,
                                             const DirichletPrior& prior,
                                             const EmissionMode& mode,
                                             std::span<const double> initial) {
    const int K = prior.K;
    const int n = static_cast<int>(obs.size());
    double total = 1.0;
    for (int t = 0; t < n; ++t) {
        total *= K;
        if (total > static_cast<double>(1 << 20))
            throw InstanceTooLargeError("brute_force_map: K^n exceeds 2^20");
    }
    StatePath path(n, 0), best_path;
    double best = -std::numeric_limits<double>::infinity();
    for (;;) {
        double score;
        try {
            score = log_joint(path, obs, prior, mode, initial);
        } catch (const InfeasiblePathError&) {
            score = -std::numeric_limits<double>::infinity();
        }
        if (score > best) {
            best = score;
            best_path = path;
        }
        int t = n - 1;
        while (t >= 0 && path[t] == K - 1) {
            path[t] = 0;
            --t;
        }
        if (t < 0)
            break;
        path[t] += 1;
    }
    if (best_path.empty())
        throw InfeasiblePathError("brute_force_map: no feasible path");
    return {std::move(best_path), best};
}

int compare_paths(const StatePath& a, const StatePath& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("compare_paths: length mismatch");
    int d = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        d += a[i] != b[i];
    return d;
}

Problem make_problem(const ExperimentConfig& cfg, std::span<const double> obs,
                     const QSpec& qspec, double M) {
    Problem prob;
    prob.obs.assign(obs.begin(), obs.end());
    prob.prior = DirichletPrior{cfg.truth.K, M, qspec.q};
    if (cfg.nix_mode)
        prob.mode = cfg.nix;
    else
        prob.mode = FixedEmissions{cfg.truth.mu, cfg.truth.sigma_sq};
    prob.initial = cfg.truth.initial;
    return prob;
}

std::vector<ResultRow> run_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    const int K = cfg.truth.K;
    const int n_q = static_cast<int>(cfg.q_matrices.size());
    const int n_m = static_cast<int>(cfg.m_values.size());
    const int n_methods = static_cast<int>(cfg.methods.size());

    // datasets
    std::vector<std::vector<double>> all_obs(cfg.num_datasets);
    for (int d = 0; d < cfg.num_datasets; ++d) {
        Rng rng = Rng(cfg.data_seed).split(static_cast<std::uint64_t>(d));
        all_obs[d] = generate_data(cfg.truth, cfg.n, rng).first;
    }

    // shared protocol matrices; Markov realizations are per dataset so the
    // two data-dependent special paths stay aligned with their dataset
    Rng init_root(cfg.init_seed);
    Rng bmat_rng = init_root.split("bmats");
    const auto b_mats = protocol_b_matrices(cfg.q_matrices, K, bmat_rng);

    // per (dataset, q): the 47 initial sequences
    std::vector<std::vector<InitialSequences>> inits(cfg.num_datasets);
    for (int d = 0; d < cfg.num_datasets; ++d) {
        inits[d].resize(n_q);
        for (int qi = 0; qi < n_q; ++qi) {
            Rng r = init_root.split(static_cast<std::uint64_t>(d));
            inits[d][qi] = generate_initial_sequences(
                cfg.truth.mu, cfg.truth.sigma_sq, cfg.truth.initial, b_mats,
                cfg.q_matrices[qi].q, all_obs[d], r);
        }
    }

    SegmenterConfig base_cfg;
    base_cfg.max_iters = cfg.max_iters;
    base_cfg.tol = cfg.tol;
    base_cfg.sa_schedule = make_sa_schedule(cfg.sa_beta_min, cfg.sa_beta_max,
                                            cfg.sa_steps, cfg.sa_samples_per_beta);

    const int n_cells = cfg.num_datasets * n_q * n_m;
    std::vector<std::vector<MethodOutcome>> outcomes(
        static_cast<std::size_t>(n_cells));

    std::atomic<int> next_cell{0};
    auto worker = [&]() {
        for (;;) {
            const int cell = next_cell.fetch_add(1);
            if (cell >= n_cells)
                return;
            const int d = cell / (n_q * n_m);
            const int qi = (cell / n_m) % n_q;
            const int mi = cell % n_m;
            const Problem prob =
                make_problem(cfg, all_obs[d], cfg.q_matrices[qi], cfg.m_values[mi]);
            const std::uint64_t sa_seed =
                Rng(cfg.sa_seed).split(static_cast<std::uint64_t>(cell)).seed();
            auto& cell_out = outcomes[static_cast<std::size_t>(cell)];
            cell_out.resize(n_methods);
            for (int m = 0; m < n_methods; ++m)
                cell_out[m] = run_method_over_inits(
                    cfg.methods[m], prob, inits[d][qi].paths, base_cfg, sa_seed);
        }
    };
    int n_threads = cfg.threads > 0
                        ? cfg.threads
                        : static_cast<int>(std::thread::hardware_concurrency());
    n_threads = std::max(1, std::min(n_threads, n_cells));
    std::vector<std::thread> pool;
    for (int i = 1; i < n_threads; ++i)
        pool.emplace_back(worker);
    worker();
    for (auto& th : pool)
        th.join();

    // assemble rows; Hamming distances are against the best feasible path
    // of each (dataset, Q, M) cell
    std::vector<ResultRow> rows;
    for (int cell = 0; cell < n_cells; ++cell) {
        const int d = cell / (n_q * n_m);
        const int qi = (cell / n_m) % n_q;
        const int mi = cell % n_m;
        const StatePath* overall = nullptr;
        double overall_best = -std::numeric_limits<double>::infinity();
        for (int m = 0; m < n_methods; ++m) {
            const auto& oc = outcomes[cell][m];
            if (oc.feasible && oc.best > overall_best) {
                overall_best = oc.best;
                overall = &oc.best_path;
            }
        }
        for (int m = 0; m < n_methods; ++m) {
            const auto& oc = outcomes[cell][m];
            ResultRow row;
            row.dataset = d;
            row.q_id = cfg.q_matrices[qi].id;
            row.M = cfg.m_values[mi];
            row.method = cfg.methods[m];
            row.feasible = oc.feasible;
            row.best_log_joint = oc.best;
            row.distinct_outputs = oc.distinct;
            row.per_init = oc.per_init;
            row.best_path = oc.best_path;
            row.hamming_to_best =
                (oc.feasible && overall) ? compare_paths(oc.best_path, *overall) : 0;
            row.wall_seconds = oc.wall;
            row.note = oc.note;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

void write_reports(const std::vector<ResultRow>& rows, const std::string& outdir) {
    std::filesystem::create_directories(outdir);
    std::ofstream t1(outdir + "/table1.csv"), t2(outdir + "/table2.csv"),
        t3(outdir + "/table3.csv");
    t1 << "dataset,Q,M,method,best_lnp,distinct_outputs\n";
    t2 << "dataset,Q,M,method,pointwise_diff\n";
    for (const auto& r : rows) {
        t1 << r.dataset << ',' << r.q_id << ',' << fmt_full(r.M) << ',' << r.method
           << ',';
        t2 << r.dataset << ',' << r.q_id << ',' << fmt_full(r.M) << ',' << r.method
           << ',';
        if (r.feasible) {
            t1 << fmt_full(r.best_log_joint) << ',' << r.distinct_outputs << '\n';
            t2 << r.hamming_to_best << '\n';
        } else {
            t1 << "na,na\n";
            t2 << "na\n";
        }
    }

    // winner/loser counts over datasets among the annealing/sEM/sMM trio
    const std::vector<std::string> trio = {"sa", "sem", "smm"};
    std::map<std::tuple<std::string, double, std::string>, std::pair<int, int>> counts;
    std::map<std::tuple<int, std::string, double, std::string>, double> best_of;
    std::set<std::pair<std::string, double>> cells;
    for (const auto& r : rows) {
        if (std::find(trio.begin(), trio.end(), r.method) == trio.end())
            continue;
        cells.insert({r.q_id, r.M});
        if (r.feasible)
            best_of[{r.dataset, r.q_id, r.M, r.method}] = r.best_log_joint;
    }
    int num_datasets = 0;
    for (const auto& r : rows)
        num_datasets = std::max(num_datasets, r.dataset + 1);
    constexpr double kTieTol = 1e-6;
    for (const auto& [qid, M] : cells) {
        for (int d = 0; d < num_datasets; ++d) {
            std::vector<std::pair<std::string, double>> present;
            for (const auto& meth : trio) {
                auto it = best_of.find({d, qid, M, meth});
                if (it != best_of.end())
                    present.push_back({meth, it->second});
            }
            if (present.size() < 2)
                continue;
            double mx = -std::numeric_limits<double>::infinity();
            for (const auto& [meth, v] : present)
                mx = std::max(mx, v);
            for (const auto& [meth, v] : present) {
                auto& c = counts[{qid, M, meth}];
                if (v >= mx - kTieTol)
                    c.first += 1;  // winner
                bool strictly_worst = true;
                for (const auto& [other, w] : present)
                    if (other != meth && !(v < w - kTieTol))
                        strictly_worst = false;
                if (strictly_worst)
                    c.second += 1;  // loser
            }
        }
    }
    t3 << "Q,M,method,n_best,n_worst\n";
    for (const auto& [key, c] : counts) {
        const auto& [qid, M, meth] = key;
        t3 << qid << ',' << fmt_full(M) << ',' << meth << ',' << c.first << ','
           << c.second << '\n';
    }
}

std::string render_report(const std::string& outdir) {
    std::string out;
    for (const char* name : {"table1.csv", "table2.csv", "table3.csv"})
        out += render_csv_aligned(outdir + "/" + name);
    return out;
}

void write_dataset(const std::string& path, const Dataset& ds) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write dataset: " + path);
    out << ds.n << ',' << ds.K << ',' << ds.seed << '\n';
    for (int t = 0; t < ds.n; ++t)
        out << fmt_full(ds.obs[t]) << ',' << ds.truth[t] + 1 << '\n';
}

Dataset read_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open dataset: " + path);
    Dataset ds;
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("dataset: missing header");
    auto header = split_csv_line(line);
    if (header.size() != 3)
        throw std::runtime_error("dataset: bad header");
    ds.n = std::stoi(header[0]);
    ds.K = std::stoi(header[1]);
    ds.seed = std::stoull(header[2]);
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        auto cells = split_csv_line(line);
        if (cells.size() != 2)
            throw std::runtime_error("dataset: bad row");
        ds.obs.push_back(std::stod(cells[0]));
        ds.truth.push_back(std::stoi(cells[1]) - 1);
    }
    if (static_cast<int>(ds.obs.size()) != ds.n)
        throw std::runtime_error("dataset: row count mismatch");
    return ds;
}

}  // namespace bhmm
