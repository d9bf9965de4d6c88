#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "pcbf/dynamics.hpp"
#include "pcbf/estimator.hpp"
#include "pcbf/filter.hpp"

namespace pcbf {

enum class Method { Deterministic, Dkw, SubGaussian };

/// "det", "dkw", "subgauss".
std::string to_string(Method method);
Method parse_method(const std::string& name);

/// Which point of the robot the goal test and the violation metric use.
enum class ReferencePoint { Center, Shifted };
std::string to_string(ReferencePoint point);
ReferencePoint parse_reference_point(const std::string& name);

struct ScenarioConfig {
    UnicycleConfig unicycle;
    VectorXd initial_mean = Eigen::Vector3d(0.0, -0.5, M_PI / 2.0);
    MatrixXd initial_cov = Eigen::Vector3d(0.02 * 0.02, 0.02 * 0.02, 0.07 * 0.07).asDiagonal();
    MatrixXd disturbance_cov = Eigen::Vector3d(0.01 * 0.01, 0.01 * 0.01, 0.05 * 0.05).asDiagonal();
    MatrixXd measurement_cov = Eigen::Vector2d(0.02 * 0.02, 0.07 * 0.07).asDiagonal();
    Eigen::Vector2d goal{0.0, -0.05};
    double goal_tolerance = 0.02;
    double horizon_seconds = 15.0;
    double k_v = 1.0;
    double k_w = 2.0;
    std::size_t particles = 500;
    double alpha = 0.1;
    double delta = 0.1;
    double gamma = 0.2;
    double subgaussian_C = std::sqrt(2.0);
    double dkw_sigmas = 6.0;
    ReferencePoint goal_point = ReferencePoint::Shifted;
    ReferencePoint safety_point = ReferencePoint::Shifted;
    bool verify = true;
    FilterOptions filter;

    void validate() const;
    int max_steps() const;
    RiskConfig risk() const;
    EkfConfig ekf() const;
};

/// v = clamp(k_v |goal - r|), omega = clamp(k_w wrap(bearing - theta)).
VectorXd nominal_pid(const VectorXd& estimated_mean, const Eigen::Vector2d& goal, double k_v, double k_w,
                     const ControlBox& box);

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct StepRecord {
    int step = 0;
    double time = 0.0;
    VectorXd true_state;     // center state before the step
    VectorXd estimate;       // posterior mean used by the filter
    MatrixXd covariance;     // posterior covariance
    double cov_trace = 0.0;
    double cov_max_eig = 0.0;
    VectorXd measurement;
    VectorXd u_des;
    VectorXd u;
    double h_true = 0.0;      // barrier at the shifted point of the true state
    double r_y = 0.0;         // center coordinate of the true state
    double h_true_next = 0.0; // barrier after the step
    double r_y_next = 0.0;
    double bound = kNaN;      // certified bound at u (probabilistic methods)
    double empirical_cvar = kNaN;
    double tail_term = kNaN;
    double band_term = kNaN;
    double sigma_bar = kNaN;
    double bound_at_desired = kNaN;
    double det_constraint = kNaN; // deterministic method's nominal constraint at u
    double support_max = kNaN;
    bool feasible = false;
    bool fallback = false;
    double verify_bound = kNaN;
    int verify_pass = -1; // -1 when not run
    std::uint64_t particle_seed = 0;
    std::uint64_t verify_seed = 0;
    std::uint64_t noise_seed = 0;
    std::uint64_t measurement_seed = 0;
};

enum class TrialOutcome { ReachedGoal, Violated, TimedOut };
std::string to_string(TrialOutcome outcome);

struct TrialLog {
    Method method = Method::SubGaussian;
    std::size_t trial = 0;
    std::uint64_t seed = 0;
    TrialOutcome outcome = TrialOutcome::TimedOut;
    bool reached = false;
    bool violated = false;
    int first_violation_step = -1;
    double first_violation_time = kNaN;
    bool center_violated = false; // some true r_y > 0, whatever safety_point is
    int reach_step = -1;
    double initial_h = 0.0; // safety-point barrier at the initial true state
    VectorXd final_state;
    std::vector<StepRecord> steps;
    std::string error; // non-empty when a module error aborted the trial

    double mean_deviation() const;
};

TrialLog run_trial(const ScenarioConfig& cfg, Method method, std::uint64_t master_seed, std::size_t trial_index);

/// Lipschitz data used for sigma_bar in the scenario.
LipschitzData scenario_lipschitz(const ScenarioConfig& cfg);

} // namespace pcbf
