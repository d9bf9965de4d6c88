#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pcbf/csv.hpp"
#include "pcbf/sim.hpp"

namespace pcbf {

struct ExperimentConfig {
    ScenarioConfig scenario;
    std::size_t trials = 100;
    std::uint64_t seed = 20250101;
    std::vector<Method> methods{Method::Deterministic, Method::Dkw, Method::SubGaussian};
    std::string out_dir = "results";
    std::size_t oracle_n = 1'000'000;
    unsigned threads = 0; // 0 picks the hardware concurrency

    void validate() const;
};

/// JSON text with the layout written by experiment_config_json. Missing keys
/// keep their defaults; unknown keys are a ConfigError.
ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);
std::string experiment_config_json(const ExperimentConfig& cfg);

struct MethodMetrics {
    Method method = Method::SubGaussian;
    std::size_t trials = 0;
    std::size_t violations = 0;
    std::size_t reached = 0;
    std::size_t failed = 0; // aborted by a module error
    std::size_t center_violations = 0;
    std::optional<double> center_violation_rate;
    std::optional<double> violation_rate;
    std::optional<double> reached_rate;
    std::optional<double> mean_first_violation_time;
    std::optional<double> mean_deviation;
    std::size_t steps = 0;
    std::size_t feasible_steps = 0;
    std::size_t feasible_step_violations = 0; // h(x+) > gamma h(x) on feasible steps
    std::optional<double> feasible_step_violation_rate;
    std::size_t fallback_steps = 0;
    std::size_t verify_runs = 0;
    std::size_t verify_passes = 0;
};

struct MetricsSummary {
    std::vector<MethodMetrics> methods;
    std::optional<double> q0; // fraction of initial draws inside the safe set
    std::size_t failed_trials = 0;

    const MethodMetrics& at(Method m) const;
};

struct MonteCarloRun {
    std::vector<TrialLog> logs; // grouped by method, then trial index
    MetricsSummary summary;
};

MetricsSummary summarize(const std::vector<TrialLog>& logs, const std::vector<Method>& methods, double gamma);

/// Runs every (method, trial) pair on a worker pool; deterministic in the master seed.
MonteCarloRun run_montecarlo(const ExperimentConfig& cfg);

CsvTable trials_table(const std::vector<TrialLog>& logs);
CsvTable steps_table(const std::vector<TrialLog>& logs);
std::string summary_json(const MonteCarloRun& run, const ExperimentConfig& cfg);

/// Writes trials.csv, steps.csv and summary.json into dir (created if needed).
void write_outputs(const MonteCarloRun& run, const ExperimentConfig& cfg, const std::string& dir);

struct GroundTruth {
    double value = 0.0;
    double standard_error = 0.0;
    double theta = 0.0; // RU minimizer (empirical VaR)
    std::size_t n = 0;
};

/// Monte Carlo CVaR_alpha of h(F(x, u, d)) - gamma h(x) with x ~ belief,
/// d ~ disturbance. The standard error is that of the RU estimator at the
/// fitted threshold. Requires oracle_n >= 1e5.
GroundTruth cvar_ground_truth(const GaussianBelief& belief, const GaussianBelief& disturbance,
                              const ControlAffineModel& model, const BarrierFunction& barrier,
                              const VectorXd& u, double gamma, double alpha, std::size_t oracle_n,
                              std::uint64_t seed);

struct CvarErrorStats {
    Method method = Method::SubGaussian;
    std::size_t rows = 0;
    double mean_error = 0.0;
    std::size_t covered = 0; // bound >= ground truth - 3 SE
};

struct CvarErrorReport {
    CsvTable table;
    std::vector<CvarErrorStats> stats;
};

/// Certified bound minus ground truth at the executed (belief, u) for every
/// probabilistic step in a steps table; u_des-based error as a second column.
CvarErrorReport cvar_error_report(const CsvTable& steps, const ExperimentConfig& cfg);

/// Column names of the CSV outputs, in order.
const std::vector<std::string>& trials_columns();
const std::vector<std::string>& steps_columns();
const std::vector<std::string>& cvar_error_columns();

} // namespace pcbf
