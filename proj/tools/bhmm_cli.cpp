// Command-line front end: generate datasets, run comparison sweeps, query
// the brute-force oracle, run the clustering solvers, render reports.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bhmm/cluster.hpp"
#include "bhmm/errors.hpp"
#include "bhmm/experiment.hpp"

namespace {

int cmd_generate(const std::string& config_path, const std::string& outdir) {
    const bhmm::ExperimentConfig cfg = bhmm::load_config(config_path);
    std::filesystem::create_directories(outdir);
    for (int d = 0; d < cfg.num_datasets; ++d) {
        bhmm::Rng rng = bhmm::Rng(cfg.data_seed).split(static_cast<std::uint64_t>(d));
        auto [obs, truth] = bhmm::generate_data(cfg.truth, cfg.n, rng);
        bhmm::Dataset ds;
        ds.n = cfg.n;
        ds.K = cfg.truth.K;
        ds.seed = cfg.data_seed;
        ds.obs = std::move(obs);
        ds.truth = std::move(truth);
        const std::string path = outdir + "/dataset" + std::to_string(d) + ".csv";
        bhmm::write_dataset(path, ds);
        std::cout << "wrote " << path << "\n";
    }
    return 0;
}

int cmd_run(const std::string& config_path, const std::string& outdir) {
    const bhmm::ExperimentConfig cfg = bhmm::load_config(config_path);
    const auto rows = bhmm::run_sweep(cfg);
    bhmm::write_reports(rows, outdir);
    double wall = 0.0;
    for (const auto& r : rows)
        wall += r.wall_seconds;
    std::cout << "wrote " << outdir << "/table{1,2,3}.csv ("
              << rows.size() << " rows, " << wall << "s method time)\n";
    return 0;
}

int cmd_oracle(const std::string& config_path, const std::string& dataset_path,
               int q_index, int m_index, int prefix) {
    const bhmm::ExperimentConfig cfg = bhmm::load_config(config_path);
    bhmm::Dataset ds = bhmm::read_dataset(dataset_path);
    if (prefix > 0 && prefix < ds.n)
        ds.obs.resize(prefix);
    const bhmm::Problem prob = bhmm::make_problem(
        cfg, ds.obs, cfg.q_matrices.at(q_index), cfg.m_values.at(m_index));
    const auto [path, score] =
        bhmm::brute_force_map(prob.obs, prob.prior, prob.mode, prob.initial);
    std::cout << "log_joint " << score << "\npath";
    for (int s : path)
        std::cout << ' ' << s + 1;
    std::cout << "\n";
    return 0;
}

int cmd_cluster(const std::string& input, int k, const std::string& rule,
                double kappa0, double nu0, double tau0_sq,
                const std::vector<double>& xi, int iters) {
    std::ifstream in(input);
    if (!in) {
        std::cerr << "cannot open " << input << "\n";
        return 1;
    }
    std::vector<double> obs;
    double v;
    while (in >> v)
        obs.push_back(v);
    bhmm::NixPrior prior;
    prior.K = k;
    prior.kappa0 = kappa0;
    prior.nu0 = nu0;
    prior.tau0_sq = tau0_sq;
    prior.xi = xi;
    if (static_cast<int>(prior.xi.size()) != k) {
        std::cerr << "need exactly K xi values\n";
        return 1;
    }
    bhmm::ClusterAssignment init;
    init.K = k;
    init.labels.resize(obs.size());
    for (std::size_t t = 0; t < obs.size(); ++t) {
        int arg = 0;
        double best = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
            const double d = std::abs(obs[t] - prior.xi[c]);
            if (d < best) {
                best = d;
                arg = c;
            }
        }
        init.labels[t] = arg;
    }
    const auto rule_enum =
        rule == "mm" ? bhmm::ClusterRule::MM : bhmm::ClusterRule::EM;
    const auto assign = bhmm::cluster_iterate(obs, prior, rule_enum, init, iters);
    std::cout << "objective "
              << bhmm::cluster_objective(assign, obs, prior,
                                         bhmm::ClusterVariant::Nu0Limit)
              << "\nlabels";
    for (int c : assign.labels)
        std::cout << ' ' << c + 1;
    std::cout << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian HMM segmentation toolkit"};
    app.require_subcommand(1);

    std::string config_path, outdir = "out", dataset_path, input;
    int q_index = 0, m_index = 0, k = 2, iters = 200, prefix = 0;
    std::string rule = "mm";
    double kappa0 = 1.0, nu0 = 1.0, tau0_sq = 1.0;
    std::vector<double> xi;

    auto* gen = app.add_subcommand("generate", "emit datasets + truth paths");
    gen->add_option("--config", config_path)->required();
    gen->add_option("--out", outdir);

    auto* run = app.add_subcommand("run", "execute a comparison sweep");
    run->add_option("--config", config_path)->required();
    run->add_option("--out", outdir);

    auto* oracle = app.add_subcommand("oracle", "brute-force MAP of a small instance");
    oracle->add_option("--config", config_path)->required();
    oracle->add_option("--dataset", dataset_path)->required();
    oracle->add_option("--q-index", q_index);
    oracle->add_option("--m-index", m_index);
    oracle->add_option("--prefix", prefix, "use only the first N observations");

    auto* cluster = app.add_subcommand("cluster", "NIX-regularized k-means");
    cluster->add_option("--input", input)->required();
    cluster->add_option("--k", k)->required();
    cluster->add_option("--rule", rule)->check(CLI::IsMember({"mm", "em"}));
    cluster->add_option("--kappa0", kappa0);
    cluster->add_option("--nu0", nu0);
    cluster->add_option("--tau0-sq", tau0_sq);
    cluster->add_option("--xi", xi)->delimiter(',');
    cluster->add_option("--iters", iters);

    auto* report = app.add_subcommand("report", "render CSVs as text tables");
    report->add_option("--dir", outdir)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed())
            return cmd_generate(config_path, outdir);
        if (run->parsed())
            return cmd_run(config_path, outdir);
        if (oracle->parsed())
            return cmd_oracle(config_path, dataset_path, q_index, m_index, prefix);
        if (cluster->parsed())
            return cmd_cluster(input, k, rule, kappa0, nu0, tau0_sq, xi, iters);
        if (report->parsed()) {
            std::cout << bhmm::render_report(outdir);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
