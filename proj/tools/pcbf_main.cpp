// Command-line front end: simulate, montecarlo, cvar-bound, ground-truth, report.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pcbf/error.hpp"
#include "pcbf/experiment.hpp"
#include "pcbf/rng.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitPartial = 3;

struct Common {
    std::string config;
    std::size_t trials = 0;
    std::uint64_t seed = 0;
    std::string method;
    std::string out;
    bool trials_set = false;
    bool seed_set = false;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "JSON config file (defaults are the reference scenario)");
    cmd->add_option("--trials", c.trials, "number of Monte Carlo trials")->each([&](const std::string&) { c.trials_set = true; });
    cmd->add_option("--seed", c.seed, "master seed")->each([&](const std::string&) { c.seed_set = true; });
    cmd->add_option("--method", c.method, "det | dkw | subgauss | all")
        ->check(CLI::IsMember({"det", "dkw", "subgauss", "all"}));
    cmd->add_option("--out", c.out, "output directory");
}

pcbf::ExperimentConfig resolve(const Common& c) {
    pcbf::ExperimentConfig cfg = c.config.empty() ? pcbf::ExperimentConfig{} : pcbf::load_experiment_config(c.config);
    if (c.trials_set) cfg.trials = c.trials;
    if (c.seed_set) cfg.seed = c.seed;
    if (!c.method.empty() && c.method != "all") cfg.methods = {pcbf::parse_method(c.method)};
    if (c.method == "all") cfg.methods = {pcbf::Method::Deterministic, pcbf::Method::Dkw, pcbf::Method::SubGaussian};
    if (!c.out.empty()) cfg.out_dir = c.out;
    cfg.validate();
    return cfg;
}

void print_metrics(const pcbf::MetricsSummary& s) {
    std::printf("%-10s %8s %10s %10s %12s %14s\n", "method", "trials", "violation", "reached", "mean|u-ud|",
                "step-viol(feas)");
    for (const auto& m : s.methods) {
        auto pct = [](const std::optional<double>& v) { return v ? 100.0 * *v : std::nan(""); };
        std::printf("%-10s %8zu %9.1f%% %9.1f%% %12.4f %13.2f%%\n", pcbf::to_string(m.method).c_str(), m.trials,
                    pct(m.violation_rate), pct(m.reached_rate), m.mean_deviation.value_or(std::nan("")),
                    pct(m.feasible_step_violation_rate));
    }
    if (s.q0) std::printf("q0 = %.4f\n", *s.q0);
}

int cmd_simulate(const Common& c, std::size_t trial) {
    const auto cfg = resolve(c);
    std::vector<pcbf::TrialLog> logs;
    for (auto m : cfg.methods) {
        logs.push_back(pcbf::run_trial(cfg.scenario, m, cfg.seed, trial));
        const auto& log = logs.back();
        std::printf("# method=%s trial=%zu outcome=%s reached=%d violated=%d\n", pcbf::to_string(m).c_str(), trial,
                    pcbf::to_string(log.outcome).c_str(), log.reached, log.violated);
        std::printf("%4s %7s %9s %9s %8s %8s %8s %8s %10s %10s %3s\n", "step", "time", "r_x", "r_y", "theta", "v",
                    "omega", "v_des", "h_true", "bound", "fb");
        for (const auto& r : log.steps)
            std::printf("%4d %7.2f %9.4f %9.4f %8.4f %8.4f %8.4f %8.4f %10.5f %10.5f %3d\n", r.step, r.time,
                        r.true_state(0), r.true_state(1), r.true_state(2), r.u(0), r.u(1), r.u_des(0), r.h_true,
                        r.bound, r.fallback);
        if (!log.error.empty()) std::printf("# error: %s\n", log.error.c_str());
    }
    if (!c.out.empty()) {
        std::filesystem::create_directories(c.out);
        pcbf::write_csv((std::filesystem::path(c.out) / "trials.csv").string(), pcbf::trials_table(logs));
        pcbf::write_csv((std::filesystem::path(c.out) / "steps.csv").string(), pcbf::steps_table(logs));
    }
    for (const auto& l : logs)
        if (!l.error.empty()) return kExitPartial;
    return 0;
}

int cmd_montecarlo(const Common& c) {
    const auto cfg = resolve(c);
    const auto run = pcbf::run_montecarlo(cfg);
    pcbf::write_outputs(run, cfg, cfg.out_dir);
    print_metrics(run.summary);
    std::printf("outputs written to %s\n", cfg.out_dir.c_str());
    return run.summary.failed_trials > 0 ? kExitPartial : 0;
}

std::vector<double> read_samples(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw pcbf::Error(pcbf::ErrorCode::ConfigError, "cannot read samples from " + path);
    std::vector<double> v;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) {
            try {
                v.push_back(pcbf::parse_real(field));
            } catch (const pcbf::Error&) {
                // header cell
            }
        }
    }
    return v;
}

int cmd_cvar_bound(const std::string& samples_path, double alpha, double delta, double sigma_bar,
                   std::optional<double> support) {
    const pcbf::SampleVector w(read_samples(samples_path));
    const pcbf::RiskConfig risk(alpha, delta, w.size());
    const auto cert = pcbf::certified_cvar_bound(w, risk, sigma_bar);
    nlohmann::json j = {{"n", cert.n},
                        {"alpha", cert.alpha},
                        {"delta", cert.delta},
                        {"sigma_bar", cert.sigma_bar},
                        {"epsilon_n", risk.band()},
                        {"empirical_cvar", cert.empirical_cvar},
                        {"band_term", cert.band_term},
                        {"tail_term", cert.tail_term},
                        {"bound", cert.bound},
                        {"safe", cert.bound <= 0.0}};
    const double s = support.value_or(pcbf::default_support_max(w));
    j["dkw_support_max"] = s;
    j["dkw_bound"] = pcbf::dkw_truncation_bound(w, alpha, delta, s);
    std::cout << j.dump(2) << '\n';
    return 0;
}

int cmd_ground_truth(const Common& c, std::vector<double> u, std::vector<double> mean, std::size_t oracle_n) {
    auto cfg = resolve(c);
    if (oracle_n > 0) cfg.oracle_n = oracle_n;
    const auto truth = pcbf::unicycle_model(cfg.scenario.unicycle);
    const pcbf::VectorXd mu =
        mean.empty() ? cfg.scenario.initial_mean : Eigen::Map<const pcbf::VectorXd>(mean.data(), 3).eval();
    const pcbf::GaussianBelief belief(mu, cfg.scenario.initial_cov);
    const pcbf::GaussianBelief dist(pcbf::VectorXd::Zero(3), cfg.scenario.disturbance_cov);
    const Eigen::Vector2d uu(u.at(0), u.at(1));
    const auto g = pcbf::cvar_ground_truth(belief, dist, truth.model, truth.barrier, uu, cfg.scenario.gamma,
                                           cfg.scenario.alpha, cfg.oracle_n,
                                           pcbf::derive_seed(cfg.seed, static_cast<std::uint64_t>(pcbf::Stream::Oracle)));
    nlohmann::json j = {{"cvar", g.value}, {"standard_error", g.standard_error}, {"var", g.theta}, {"n", g.n},
                        {"alpha", cfg.scenario.alpha}, {"gamma", cfg.scenario.gamma}, {"u", u}};
    std::cout << j.dump(2) << '\n';
    return 0;
}

int cmd_report(const Common& c, const std::string& in_dir) {
    const auto cfg = resolve(c);
    const std::string dir = in_dir.empty() ? cfg.out_dir : in_dir;
    const auto trials = pcbf::read_csv((std::filesystem::path(dir) / "trials.csv").string());
    const auto steps = pcbf::read_csv((std::filesystem::path(dir) / "steps.csv").string());
    trials.require(pcbf::trials_columns());
    steps.require(pcbf::steps_columns());

    const auto report = pcbf::cvar_error_report(steps, cfg);
    const std::string out_dir = c.out.empty() ? dir : c.out;
    std::filesystem::create_directories(out_dir);
    pcbf::write_csv((std::filesystem::path(out_dir) / "cvar_error.csv").string(), report.table);

    std::printf("%-10s %8s %10s %10s\n", "method", "trials", "violation", "reached");
    for (auto m : {pcbf::Method::Deterministic, pcbf::Method::Dkw, pcbf::Method::SubGaussian}) {
        std::size_t n = 0, v = 0, r = 0;
        for (std::size_t i = 0; i < trials.rows.size(); ++i) {
            if (trials.text(i, "method") != pcbf::to_string(m)) continue;
            ++n;
            v += trials.text(i, "violated") == "1";
            r += trials.text(i, "reached") == "1";
        }
        if (n > 0)
            std::printf("%-10s %8zu %9.1f%% %9.1f%%\n", pcbf::to_string(m).c_str(), n, 100.0 * v / n, 100.0 * r / n);
    }
    for (const auto& s : report.stats)
        std::printf("cvar error %-9s rows=%zu mean=%.5f covered(>= gt-3se)=%.4f\n", pcbf::to_string(s.method).c_str(),
                    s.rows, s.mean_error, s.rows ? static_cast<double>(s.covered) / s.rows : 0.0);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Probabilistic CBF safety filtering with certified CVaR bounds"};
    app.require_subcommand(1);

    Common common;
    auto* sim = app.add_subcommand("simulate", "run a single trial and print its log");
    add_common(sim, common);
    std::size_t trial = 0;
    sim->add_option("--trial", trial, "trial index");

    auto* mc = app.add_subcommand("montecarlo", "run the Monte Carlo study");
    add_common(mc, common);

    auto* cb = app.add_subcommand("cvar-bound", "certified CVaR bound for a sample file");
    std::string samples;
    double alpha = 0.1, delta = 0.1, sigma_bar = 0.0;
    std::optional<double> support;
    cb->add_option("samples", samples, "file with one sample per line (or comma-separated)")->required();
    cb->add_option("--alpha", alpha);
    cb->add_option("--delta", delta);
    cb->add_option("--sigma-bar", sigma_bar);
    cb->add_option("--support-max", support);

    auto* gt = app.add_subcommand("ground-truth", "Monte Carlo CVaR of the barrier increment");
    add_common(gt, common);
    std::vector<double> u{0.0, 0.0}, mean;
    std::size_t oracle_n = 0;
    gt->add_option("--u", u, "control v omega")->expected(2);
    gt->add_option("--mean", mean, "belief mean (defaults to the initial mean)")->expected(3);
    gt->add_option("--oracle-n", oracle_n);

    auto* rep = app.add_subcommand("report", "metrics and cvar_error.csv from a finished run");
    add_common(rep, common);
    std::string in_dir;
    rep->add_option("--in", in_dir, "directory holding trials.csv and steps.csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*sim) return cmd_simulate(common, trial);
        if (*mc) return cmd_montecarlo(common);
        if (*cb) return cmd_cvar_bound(samples, alpha, delta, sigma_bar, support);
        if (*gt) return cmd_ground_truth(common, u, mean, oracle_n);
        if (*rep) return cmd_report(common, in_dir);
    } catch (const pcbf::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.code() == pcbf::ErrorCode::ConfigError ? kExitConfig : 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
