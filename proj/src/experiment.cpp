#include "pcbf/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "pcbf/error.hpp"
#include "pcbf/rng.hpp"

namespace pcbf {

using nlohmann::json;

namespace {

template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) fn(i);
    };
    if (threads <= 1) {
        worker();
        return;
    }
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

VectorXd std_vector(const json& j, Eigen::Index n, const std::string& key) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n)
        throw Error(ErrorCode::ConfigError, key + " must be an array of " + std::to_string(n) + " numbers");
    VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = j.at(static_cast<std::size_t>(i)).get<double>();
    return v;
}

json to_json_vec(const VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

VectorXd diag_std(const MatrixXd& cov) { return cov.diagonal().cwiseSqrt(); }

void reject_unknown(const json& j, const std::vector<std::string>& known, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::find(known.begin(), known.end(), it.key()) == known.end())
            throw Error(ErrorCode::ConfigError, "unknown key '" + it.key() + "' in " + where);
}

template <class T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string bool_text(bool b) { return b ? "1" : "0"; }

} // namespace

// --- configuration ----------------------------------------------------------

void ExperimentConfig::validate() const {
    scenario.validate();
    if (methods.empty()) throw Error(ErrorCode::ConfigError, "no methods selected");
    if (oracle_n < 100000) throw Error(ErrorCode::ConfigError, "oracle_n must be at least 1e5");
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
    ExperimentConfig cfg;
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigError, std::string("malformed config: ") + e.what());
    }
    try {
        reject_unknown(root, {"trials", "seed", "methods", "out", "oracle_n", "threads", "scenario"}, "config");
        read(root, "trials", cfg.trials);
        read(root, "seed", cfg.seed);
        read(root, "out", cfg.out_dir);
        read(root, "oracle_n", cfg.oracle_n);
        read(root, "threads", cfg.threads);
        if (root.contains("methods")) {
            cfg.methods.clear();
            for (const auto& m : root.at("methods")) cfg.methods.push_back(parse_method(m.get<std::string>()));
        }
        if (root.contains("scenario")) {
            const json& s = root.at("scenario");
            reject_unknown(s,
                           {"unicycle", "initial_mean", "initial_std", "disturbance_std", "measurement_std", "goal",
                            "goal_tolerance", "horizon_seconds", "gains", "particles", "alpha", "delta", "gamma",
                            "C", "dkw_sigmas", "goal_point", "safety_point", "verify", "formulation", "max_cuts"},
                           "scenario");
            ScenarioConfig& sc = cfg.scenario;
            if (s.contains("unicycle")) {
                const json& u = s.at("unicycle");
                reject_unknown(u, {"ell", "v_max", "omega_max", "wheelbase", "steer_max_deg", "dt"}, "unicycle");
                read(u, "ell", sc.unicycle.ell);
                read(u, "v_max", sc.unicycle.v_max);
                read(u, "omega_max", sc.unicycle.omega_max);
                read(u, "wheelbase", sc.unicycle.wheelbase);
                read(u, "dt", sc.unicycle.dt);
                if (u.contains("steer_max_deg")) sc.unicycle.steer_max = u.at("steer_max_deg").get<double>() * M_PI / 180.0;
            }
            if (s.contains("initial_mean")) sc.initial_mean = std_vector(s.at("initial_mean"), 3, "initial_mean");
            if (s.contains("initial_std"))
                sc.initial_cov = std_vector(s.at("initial_std"), 3, "initial_std").cwiseAbs2().asDiagonal();
            if (s.contains("disturbance_std"))
                sc.disturbance_cov = std_vector(s.at("disturbance_std"), 3, "disturbance_std").cwiseAbs2().asDiagonal();
            if (s.contains("measurement_std"))
                sc.measurement_cov = std_vector(s.at("measurement_std"), 2, "measurement_std").cwiseAbs2().asDiagonal();
            if (s.contains("goal")) sc.goal = std_vector(s.at("goal"), 2, "goal");
            read(s, "goal_tolerance", sc.goal_tolerance);
            read(s, "horizon_seconds", sc.horizon_seconds);
            if (s.contains("gains")) {
                const json& g = s.at("gains");
                reject_unknown(g, {"k_v", "k_w"}, "gains");
                read(g, "k_v", sc.k_v);
                read(g, "k_w", sc.k_w);
            }
            read(s, "particles", sc.particles);
            read(s, "alpha", sc.alpha);
            read(s, "delta", sc.delta);
            read(s, "gamma", sc.gamma);
            read(s, "C", sc.subgaussian_C);
            read(s, "dkw_sigmas", sc.dkw_sigmas);
            read(s, "verify", sc.verify);
            read(s, "max_cuts", sc.filter.max_cuts);
            if (s.contains("goal_point")) sc.goal_point = parse_reference_point(s.at("goal_point").get<std::string>());
            if (s.contains("safety_point"))
                sc.safety_point = parse_reference_point(s.at("safety_point").get<std::string>());
            if (s.contains("formulation")) {
                const auto f = s.at("formulation").get<std::string>();
                if (f == "reduced") sc.filter.formulation = Formulation::Reduced;
                else if (f == "full") sc.filter.formulation = Formulation::Full;
                else throw Error(ErrorCode::ConfigError, "unknown formulation '" + f + "'");
            }
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigError, std::string("bad config value: ") + e.what());
    }
    try {
        cfg.validate();
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ConfigError) throw;
        throw Error(ErrorCode::ConfigError, e.what());
    }
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ConfigError, "cannot read config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_experiment_config(ss.str());
}

std::string experiment_config_json(const ExperimentConfig& cfg) {
    const ScenarioConfig& s = cfg.scenario;
    json methods = json::array();
    for (auto m : cfg.methods) methods.push_back(to_string(m));
    json j = {
        {"trials", cfg.trials},
        {"seed", cfg.seed},
        {"methods", methods},
        {"out", cfg.out_dir},
        {"oracle_n", cfg.oracle_n},
        {"threads", cfg.threads},
        {"scenario",
         {{"unicycle",
           {{"ell", s.unicycle.ell},
            {"v_max", s.unicycle.v_max},
            {"omega_max", s.unicycle.omega_max},
            {"wheelbase", s.unicycle.wheelbase},
            {"steer_max_deg", s.unicycle.steer_max * 180.0 / M_PI},
            {"dt", s.unicycle.dt}}},
          {"initial_mean", to_json_vec(s.initial_mean)},
          {"initial_std", to_json_vec(diag_std(s.initial_cov))},
          {"disturbance_std", to_json_vec(diag_std(s.disturbance_cov))},
          {"measurement_std", to_json_vec(diag_std(s.measurement_cov))},
          {"goal", {s.goal(0), s.goal(1)}},
          {"goal_tolerance", s.goal_tolerance},
          {"horizon_seconds", s.horizon_seconds},
          {"gains", {{"k_v", s.k_v}, {"k_w", s.k_w}}},
          {"particles", s.particles},
          {"alpha", s.alpha},
          {"delta", s.delta},
          {"gamma", s.gamma},
          {"C", s.subgaussian_C},
          {"dkw_sigmas", s.dkw_sigmas},
          {"goal_point", to_string(s.goal_point)},
          {"safety_point", to_string(s.safety_point)},
          {"verify", s.verify},
          {"formulation", s.filter.formulation == Formulation::Full ? "full" : "reduced"},
          {"max_cuts", s.filter.max_cuts}}}};
    return j.dump(2);
}

// --- Monte Carlo ------------------------------------------------------------

const MethodMetrics& MetricsSummary::at(Method m) const {
    for (const auto& mm : methods)
        if (mm.method == m) return mm;
    throw Error(ErrorCode::InvalidInput, "method not in summary: " + to_string(m));
}

MetricsSummary summarize(const std::vector<TrialLog>& logs, const std::vector<Method>& methods, double gamma) {
    MetricsSummary s;
    std::size_t q_total = 0, q_safe = 0;
    for (auto m : methods) {
        MethodMetrics mm;
        mm.method = m;
        double fv_sum = 0.0, dev_sum = 0.0;
        std::size_t dev_count = 0;
        for (const auto& log : logs) {
            if (log.method != m) continue;
            ++mm.trials;
            if (!log.error.empty()) ++mm.failed;
            if (log.violated) {
                ++mm.violations;
                fv_sum += log.first_violation_time;
            }
            if (log.reached) ++mm.reached;
            if (log.center_violated) ++mm.center_violations;
            if (!log.steps.empty()) {
                dev_sum += log.mean_deviation();
                ++dev_count;
            }
            for (const auto& r : log.steps) {
                ++mm.steps;
                if (r.fallback) ++mm.fallback_steps;
                if (r.feasible) {
                    ++mm.feasible_steps;
                    if (r.h_true_next > gamma * r.h_true) ++mm.feasible_step_violations;
                }
                if (r.verify_pass >= 0) {
                    ++mm.verify_runs;
                    if (r.verify_pass == 1) ++mm.verify_passes;
                }
            }
            if (m == methods.front()) {
                ++q_total;
                if (log.initial_h <= 0.0) ++q_safe;
            }
        }
        if (mm.trials > 0) {
            mm.violation_rate = static_cast<double>(mm.violations) / static_cast<double>(mm.trials);
            mm.reached_rate = static_cast<double>(mm.reached) / static_cast<double>(mm.trials);
            mm.center_violation_rate = static_cast<double>(mm.center_violations) / static_cast<double>(mm.trials);
        }
        if (mm.violations > 0) mm.mean_first_violation_time = fv_sum / static_cast<double>(mm.violations);
        if (dev_count > 0) mm.mean_deviation = dev_sum / static_cast<double>(dev_count);
        if (mm.feasible_steps > 0)
            mm.feasible_step_violation_rate =
                static_cast<double>(mm.feasible_step_violations) / static_cast<double>(mm.feasible_steps);
        s.failed_trials += mm.failed;
        s.methods.push_back(mm);
    }
    if (q_total > 0) s.q0 = static_cast<double>(q_safe) / static_cast<double>(q_total);
    return s;
}

MonteCarloRun run_montecarlo(const ExperimentConfig& cfg) {
    cfg.validate();
    MonteCarloRun run;
    const std::size_t total = cfg.trials * cfg.methods.size();
    run.logs.resize(total);
    parallel_for(total, cfg.threads, [&](std::size_t job) {
        const Method m = cfg.methods[job / std::max<std::size_t>(cfg.trials, 1)];
        const std::size_t trial = job % std::max<std::size_t>(cfg.trials, 1);
        run.logs[job] = run_trial(cfg.scenario, m, cfg.seed, trial);
    });
    run.summary = summarize(run.logs, cfg.methods, cfg.scenario.gamma);
    return run;
}

const std::vector<std::string>& trials_columns() {
    static const std::vector<std::string> cols{
        "method", "trial", "seed", "outcome", "reached", "violated", "center_violated", "first_violation_step", "first_violation_time",
        "reach_step", "steps", "initial_h", "final_x", "final_y", "final_theta", "mean_deviation", "error"};
    return cols;
}

const std::vector<std::string>& steps_columns() {
    static const std::vector<std::string> cols{
        "method", "trial", "step", "time", "true_x", "true_y", "true_theta", "est_x", "est_y", "est_theta",
        "cov_00", "cov_01", "cov_02", "cov_10", "cov_11", "cov_12", "cov_20", "cov_21", "cov_22", "cov_trace",
        "cov_max_eig", "meas_y", "meas_theta", "u_des_v", "u_des_omega", "u_v", "u_omega", "h_true", "r_y",
        "h_true_next", "r_y_next", "bound", "empirical_cvar", "tail_term", "band_term", "sigma_bar",
        "bound_at_desired", "det_constraint", "support_max", "feasible", "fallback", "verify_bound", "verify_pass",
        "particle_seed", "verify_seed", "noise_seed", "measurement_seed"};
    return cols;
}

const std::vector<std::string>& cvar_error_columns() {
    static const std::vector<std::string> cols{
        "method", "trial", "step", "time", "bound", "ground_truth", "ground_truth_se", "error",
        "bound_at_desired", "ground_truth_desired", "ground_truth_desired_se", "error_desired"};
    return cols;
}

CsvTable trials_table(const std::vector<TrialLog>& logs) {
    CsvTable t;
    t.header = trials_columns();
    for (const auto& log : logs) {
        const VectorXd& f = log.final_state;
        t.rows.push_back({to_string(log.method), std::to_string(log.trial), std::to_string(log.seed),
                          to_string(log.outcome), bool_text(log.reached), bool_text(log.violated), bool_text(log.center_violated),
                          std::to_string(log.first_violation_step), format_real(log.first_violation_time),
                          std::to_string(log.reach_step), std::to_string(log.steps.size()),
                          format_real(log.initial_h), format_real(f.size() ? f(0) : kNaN),
                          format_real(f.size() ? f(1) : kNaN), format_real(f.size() ? f(2) : kNaN),
                          format_real(log.mean_deviation()), log.error});
        // the CSV has no quoting
        for (char& ch : t.rows.back().back())
            if (ch == ',' || ch == '\n') ch = ';';
    }
    return t;
}

CsvTable steps_table(const std::vector<TrialLog>& logs) {
    CsvTable t;
    t.header = steps_columns();
    for (const auto& log : logs) {
        for (const auto& r : log.steps) {
            std::vector<std::string> row{to_string(log.method), std::to_string(log.trial), std::to_string(r.step),
                                         format_real(r.time)};
            for (int i = 0; i < 3; ++i) row.push_back(format_real(r.true_state(i)));
            for (int i = 0; i < 3; ++i) row.push_back(format_real(r.estimate(i)));
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) row.push_back(format_real(r.covariance(i, j)));
            for (double v : {r.cov_trace, r.cov_max_eig, r.measurement(0), r.measurement(1), r.u_des(0), r.u_des(1),
                             r.u(0), r.u(1), r.h_true, r.r_y, r.h_true_next, r.r_y_next, r.bound, r.empirical_cvar,
                             r.tail_term, r.band_term, r.sigma_bar, r.bound_at_desired, r.det_constraint,
                             r.support_max})
                row.push_back(format_real(v));
            row.push_back(bool_text(r.feasible));
            row.push_back(bool_text(r.fallback));
            row.push_back(format_real(r.verify_bound));
            row.push_back(std::to_string(r.verify_pass));
            for (auto s : {r.particle_seed, r.verify_seed, r.noise_seed, r.measurement_seed})
                row.push_back(std::to_string(s));
            t.rows.push_back(std::move(row));
        }
    }
    return t;
}

std::string summary_json(const MonteCarloRun& run, const ExperimentConfig& cfg) {
    json methods = json::object();
    for (const auto& m : run.summary.methods) {
        methods[to_string(m.method)] = {
            {"trials", m.trials},
            {"violations", m.violations},
            {"reached", m.reached},
            {"failed", m.failed},
            {"violation_rate", optional_json(m.violation_rate)},
            {"reached_rate", optional_json(m.reached_rate)},
            {"center_violations", m.center_violations},
            {"center_violation_rate", optional_json(m.center_violation_rate)},
            {"mean_first_violation_time", optional_json(m.mean_first_violation_time)},
            {"mean_deviation", optional_json(m.mean_deviation)},
            {"steps", m.steps},
            {"feasible_steps", m.feasible_steps},
            {"feasible_step_violations", m.feasible_step_violations},
            {"feasible_step_violation_rate", optional_json(m.feasible_step_violation_rate)},
            {"fallback_steps", m.fallback_steps},
            {"verify_runs", m.verify_runs},
            {"verify_passes", m.verify_passes},
        };
    }
    // every seed a trial can draw from; identical across methods for a given trial
    json ledger = json::array();
    const int max_steps = cfg.scenario.max_steps();
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        json steps = json::array();
        for (int k = 0; k < max_steps; ++k) {
            const auto kk = static_cast<std::uint64_t>(k);
            steps.push_back({step_seed(cfg.seed, t, kk, Stream::Measurement),
                             step_seed(cfg.seed, t, kk, Stream::FilterParticles),
                             step_seed(cfg.seed, t, kk, Stream::VerifyParticles),
                             step_seed(cfg.seed, t, kk, Stream::ProcessNoise),
                             step_seed(cfg.seed, t, kk, Stream::Oracle)});
        }
        ledger.push_back({{"trial", t},
                          {"trial_seed", trial_seed(cfg.seed, t)},
                          {"initial_state_seed", step_seed(cfg.seed, t, 0, Stream::InitialState)},
                          {"step_seeds", std::move(steps)}});
    }
    json j = {{"master_seed", cfg.seed},
              {"trials", cfg.trials},
              {"q0", optional_json(run.summary.q0)},
              {"failed_trials", run.summary.failed_trials},
              {"methods", methods},
              {"config", json::parse(experiment_config_json(cfg))},
              {"seed_ledger",
               {{"step_seed_order", {"measurement", "filter_particles", "verify_particles", "process_noise", "oracle"}},
                {"trials", std::move(ledger)}}}};
    return j.dump(2);
}

void write_outputs(const MonteCarloRun& run, const ExperimentConfig& cfg, const std::string& dir) {
    std::filesystem::create_directories(dir);
    write_csv((std::filesystem::path(dir) / "trials.csv").string(), trials_table(run.logs));
    write_csv((std::filesystem::path(dir) / "steps.csv").string(), steps_table(run.logs));
    std::ofstream out(std::filesystem::path(dir) / "summary.json");
    out << summary_json(run, cfg) << '\n';
}

// --- ground truth -----------------------------------------------------------

GroundTruth cvar_ground_truth(const GaussianBelief& belief, const GaussianBelief& disturbance,
                              const ControlAffineModel& model, const BarrierFunction& barrier, const VectorXd& u,
                              double gamma, double alpha, std::size_t oracle_n, std::uint64_t seed) {
    if (oracle_n < 100000) throw Error(ErrorCode::InvalidInput, "oracle_n must be at least 1e5");
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidAlpha, "alpha must lie in (0, 1)");
    constexpr std::size_t kChunk = 100000;
    std::vector<double> values;
    values.reserve(oracle_n);
    for (std::size_t start = 0, chunk = 0; start < oracle_n; start += kChunk, ++chunk) {
        const auto m = static_cast<Eigen::Index>(std::min(kChunk, oracle_n - start));
        const ParticleSet p = sample_particles(belief, disturbance, m, derive_seed(seed, chunk));
        const SampleVector w = barrier_increments(model, barrier, p, u, gamma);
        values.insert(values.end(), w.values().begin(), w.values().end());
    }
    std::sort(values.begin(), values.end());
    const auto fit = detail::empirical_cvar_sorted(values, alpha);

    // RU estimator terms y_i = theta + (x_i - theta)_+ / alpha
    const double n = static_cast<double>(values.size());
    double mean = 0.0, m2 = 0.0;
    std::size_t i = 0;
    for (double x : values) {
        const double yv = fit.theta + std::max(0.0, x - fit.theta) / alpha;
        const double delta = yv - mean;
        mean += delta / static_cast<double>(++i);
        m2 += delta * (yv - mean);
    }
    GroundTruth g;
    g.value = fit.value;
    g.theta = fit.theta;
    g.n = values.size();
    g.standard_error = std::sqrt(m2 / (n - 1.0)) / std::sqrt(n);
    return g;
}

CvarErrorReport cvar_error_report(const CsvTable& steps, const ExperimentConfig& cfg) {
    steps.require({"method", "trial", "step", "time", "est_x", "est_y", "est_theta", "cov_00", "cov_01", "cov_02",
                   "cov_10", "cov_11", "cov_12", "cov_20", "cov_21", "cov_22", "u_v", "u_omega", "u_des_v",
                   "u_des_omega", "bound", "bound_at_desired"});
    const auto truth = unicycle_model(cfg.scenario.unicycle);
    const GaussianBelief disturbance(VectorXd::Zero(3), cfg.scenario.disturbance_cov);

    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < steps.rows.size(); ++r) {
        const Method m = parse_method(steps.text(r, "method"));
        if (m != Method::Deterministic && std::isfinite(steps.real(r, "bound"))) rows.push_back(r);
    }

    CvarErrorReport report;
    report.table.header = cvar_error_columns();
    report.table.rows.resize(rows.size());
    parallel_for(rows.size(), cfg.threads, [&](std::size_t idx) {
        const std::size_t r = rows[idx];
        const auto trial = static_cast<std::uint64_t>(std::stoull(steps.text(r, "trial")));
        const auto step = static_cast<std::uint64_t>(std::stoull(steps.text(r, "step")));
        VectorXd mean(3);
        mean << steps.real(r, "est_x"), steps.real(r, "est_y"), steps.real(r, "est_theta");
        MatrixXd cov(3, 3);
        const char* names[3][3] = {{"cov_00", "cov_01", "cov_02"}, {"cov_10", "cov_11", "cov_12"},
                                   {"cov_20", "cov_21", "cov_22"}};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) cov(i, j) = steps.real(r, names[i][j]);
        cov = 0.5 * (cov + cov.transpose());
        const GaussianBelief belief(mean, cov);
        const Eigen::Vector2d u(steps.real(r, "u_v"), steps.real(r, "u_omega"));
        const Eigen::Vector2d ud(steps.real(r, "u_des_v"), steps.real(r, "u_des_omega"));
        const std::uint64_t seed = step_seed(cfg.seed, trial, step, Stream::Oracle);
        const double alpha = cfg.scenario.alpha, gamma = cfg.scenario.gamma;
        const GroundTruth g = cvar_ground_truth(belief, disturbance, truth.model, truth.barrier, u, gamma, alpha,
                                                cfg.oracle_n, seed);
        const GroundTruth gd = cvar_ground_truth(belief, disturbance, truth.model, truth.barrier, ud, gamma, alpha,
                                                 cfg.oracle_n, seed);
        const double bound = steps.real(r, "bound");
        const double bound_d = steps.real(r, "bound_at_desired");
        report.table.rows[idx] = {steps.text(r, "method"), steps.text(r, "trial"), steps.text(r, "step"),
                                  steps.text(r, "time"), format_real(bound), format_real(g.value),
                                  format_real(g.standard_error), format_real(bound - g.value), format_real(bound_d),
                                  format_real(gd.value), format_real(gd.standard_error), format_real(bound_d - gd.value)};
    });

    for (auto m : {Method::Dkw, Method::SubGaussian}) {
        CvarErrorStats st;
        st.method = m;
        double sum = 0.0;
        for (const auto& row : report.table.rows) {
            if (parse_method(row[0]) != m) continue;
            ++st.rows;
            const double bound = parse_real(row[4]), gt = parse_real(row[5]), se = parse_real(row[6]);
            sum += bound - gt;
            if (bound >= gt - 3.0 * se) ++st.covered;
        }
        if (st.rows > 0) {
            st.mean_error = sum / static_cast<double>(st.rows);
            report.stats.push_back(st);
        }
    }
    return report;
}

} // namespace pcbf
