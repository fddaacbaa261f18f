#ifndef BHMM_EXPERIMENT_HPP
#define BHMM_EXPERIMENT_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bhmm/hmm.hpp"
#include "bhmm/model.hpp"
#include "bhmm/segment.hpp"

namespace bhmm {

struct QSpec {
    std::string id;
    std::vector<double> q;  // K*K row-major
};

struct ExperimentConfig {
    HmmParams truth;
    int n = 600;
    int num_datasets = 1;
    std::vector<QSpec> q_matrices;
    std::vector<double> m_values;
    bool nix_mode = false;
    NixPrior nix;
    std::vector<std::string> methods;  // sem smm icm vb bem em sa
    std::uint64_t data_seed = 0, init_seed = 0, sa_seed = 0;
    double sa_beta_min = 1.0, sa_beta_max = 10.2;
    int sa_steps = 47, sa_samples_per_beta = 15;
    int max_iters = 500;
    double tol = 1e-8;
    int threads = 0;  // 0: hardware concurrency

    void validate() const;
};

ExperimentConfig load_config(const std::string& path);

// The 15 initial-path matrices of the comparison protocol: the configured
// Q matrices first, then rows drawn from Dir(a,...,a) for the 12 protocol
// concentrations 0.3 .. 1.9.
std::vector<std::vector<double>> protocol_b_matrices(const std::vector<QSpec>& qs,
                                                     int K, Rng& rng);

struct InitialSequences {
    std::vector<StatePath> paths;           // 3 per matrix + 2 special = 47
    std::vector<bool> stationary_fallback;  // per matrix
};

// Three Markov realizations per matrix (stationary initial law), the
// pointwise-max-emission path and the Viterbi path under q_viterbi.
InitialSequences generate_initial_sequences(
    const std::vector<double>& emit_mu, const std::vector<double>& emit_sigma_sq,
    std::span<const double> initial, const std::vector<std::vector<double>>& b_matrices,
    const std::vector<double>& q_viterbi, std::span<const double> obs, Rng& rng);

// Exhaustive MAP over all K^n paths (guard K^n <= 2^20).
std::pair<StatePath, double> brute_force_map(std::span<const double> obs,
                                             const DirichletPrior& prior,
                                             const EmissionMode& mode,
                                             std::span<const double> initial);

// Hamming distance; throws std::invalid_argument on length mismatch.
int compare_paths(const StatePath& a, const StatePath& b);

struct ResultRow {
    int dataset = 0;
    std::string q_id;
    double M = 0.0;
    std::string method;
    bool feasible = true;  // false renders as 'na'
    double best_log_joint = 0.0;
    int distinct_outputs = 0;
    std::vector<double> per_init;
    StatePath best_path;
    int hamming_to_best = 0;
    double wall_seconds = 0.0;
    std::string note;
};

std::vector<ResultRow> run_sweep(const ExperimentConfig& cfg);

// table1.csv (best score per cell), table2.csv (pointwise differences),
// table3.csv (winner/loser counts among sem/smm/sa).
void write_reports(const std::vector<ResultRow>& rows, const std::string& outdir);

// Aligned text rendering of the CSVs in `outdir` (floats at 2 decimals).
std::string render_report(const std::string& outdir);

struct Dataset {
    int n = 0;
    int K = 0;
    std::uint64_t seed = 0;
    std::vector<double> obs;
    StatePath truth;
};

void write_dataset(const std::string& path, const Dataset& ds);
Dataset read_dataset(const std::string& path);

// Problem for one (Q, M) cell of a config.
Problem make_problem(const ExperimentConfig& cfg, std::span<const double> obs,
                     const QSpec& qspec, double M);

}  // namespace bhmm

#endif
