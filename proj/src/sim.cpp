#include "pcbf/sim.hpp"

#include <cmath>

#include "pcbf/error.hpp"
#include "pcbf/rng.hpp"

namespace pcbf {

namespace {

VectorXd gaussian_draw(const VectorXd& mean, const MatrixXd& cov, std::uint64_t seed) {
    const MatrixXd L = cholesky_psd(cov).lower;
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    VectorXd z(mean.size());
    for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = normal(rng);
    return mean + L * z;
}

Eigen::Vector2d point_of(const VectorXd& center, ReferencePoint p, double ell) {
    if (p == ReferencePoint::Center) return center.head<2>();
    return to_shifted_point(center, ell).head<2>();
}

} // namespace

std::string to_string(Method method) {
    switch (method) {
    case Method::Deterministic: return "det";
    case Method::Dkw: return "dkw";
    case Method::SubGaussian: return "subgauss";
    }
    return "unknown";
}

Method parse_method(const std::string& name) {
    if (name == "det" || name == "deterministic") return Method::Deterministic;
    if (name == "dkw") return Method::Dkw;
    if (name == "subgauss" || name == "subgaussian") return Method::SubGaussian;
    throw Error(ErrorCode::ConfigError, "unknown method '" + name + "'");
}

std::string to_string(ReferencePoint point) { return point == ReferencePoint::Center ? "center" : "shifted"; }

ReferencePoint parse_reference_point(const std::string& name) {
    if (name == "center") return ReferencePoint::Center;
    if (name == "shifted") return ReferencePoint::Shifted;
    throw Error(ErrorCode::ConfigError, "unknown reference point '" + name + "'");
}

std::string to_string(TrialOutcome outcome) {
    switch (outcome) {
    case TrialOutcome::ReachedGoal: return "ReachedGoal";
    case TrialOutcome::Violated: return "Violated";
    case TrialOutcome::TimedOut: return "TimedOut";
    }
    return "Unknown";
}

void ScenarioConfig::validate() const {
    unicycle.validate();
    if (initial_mean.size() != 3 || initial_cov.rows() != 3 || disturbance_cov.rows() != 3 ||
        measurement_cov.rows() != 2)
        throw Error(ErrorCode::ConfigError, "scenario covariances must be 3x3 (state) and 2x2 (measurement)");
    if (!(goal_tolerance > 0.0) || !(horizon_seconds > 0.0) || !(dkw_sigmas > 0.0) || particles < 1)
        throw Error(ErrorCode::ConfigError, "scenario parameters out of range");
    ekf().validate();
    (void)risk();
}

int ScenarioConfig::max_steps() const {
    return static_cast<int>(std::ceil(horizon_seconds / unicycle.dt - 1e-9));
}

RiskConfig ScenarioConfig::risk() const { return RiskConfig(alpha, delta, particles, gamma); }

EkfConfig ScenarioConfig::ekf() const {
    return EkfConfig{disturbance_cov, measurement_cov, initial_cov, unicycle_measurement()};
}

LipschitzData scenario_lipschitz(const ScenarioConfig& cfg) {
    return unicycle_increment_lipschitz(cfg.unicycle, cfg.gamma, cfg.subgaussian_C);
}

VectorXd nominal_pid(const VectorXd& estimated_mean, const Eigen::Vector2d& goal, double k_v, double k_w,
                     const ControlBox& box) {
    const Eigen::Vector2d e = goal - estimated_mean.head<2>();
    const double dist = e.norm();
    VectorXd u(2);
    u(0) = k_v * dist;
    u(1) = dist > 0.0 ? k_w * wrap_angle(std::atan2(e(1), e(0)) - estimated_mean(2)) : 0.0;
    return box.clamp(u);
}

double TrialLog::mean_deviation() const {
    if (steps.empty()) return kNaN;
    double s = 0.0;
    for (const auto& r : steps) s += (r.u - r.u_des).norm();
    return s / static_cast<double>(steps.size());
}

TrialLog run_trial(const ScenarioConfig& cfg, Method method, std::uint64_t master_seed, std::size_t trial_index) {
    cfg.validate();
    TrialLog log;
    log.method = method;
    log.trial = trial_index;
    log.seed = trial_seed(master_seed, trial_index);

    const auto center = unicycle_model(cfg.unicycle);
    const ControlAffineModel p_model = shifted_point_model(cfg.unicycle);
    const BarrierFunction fence = shifted_point_geofence();
    const ControlBox box = cfg.unicycle.box();
    const EkfConfig ekf = cfg.ekf();
    const RiskConfig risk = cfg.risk();
    const LipschitzData lip = scenario_lipschitz(cfg);
    const GaussianBelief disturbance(VectorXd::Zero(3), cfg.disturbance_cov);
    const double ell = cfg.unicycle.ell;
    const double dkw_sigmas = cfg.dkw_sigmas;
    const double lambda_d = disturbance.max_eigenvalue();

    auto safety_value = [&](const VectorXd& x) {
        return cfg.safety_point == ReferencePoint::Center ? x(1) : center.barrier.value(x);
    };
    auto at_goal = [&](const VectorXd& x) {
        return (point_of(x, cfg.goal_point, ell) - cfg.goal).norm() <= cfg.goal_tolerance;
    };

    VectorXd x = gaussian_draw(cfg.initial_mean, cfg.initial_cov,
                               step_seed(master_seed, trial_index, 0, Stream::InitialState));
    GaussianBelief belief(cfg.initial_mean, cfg.initial_cov);
    log.initial_h = safety_value(x);

    auto note_violation = [&](double value, int step) {
        if (x(1) > 0.0) log.center_violated = true;
        if (value > 0.0 && !log.violated) {
            log.violated = true;
            log.first_violation_step = step;
            log.first_violation_time = step * cfg.unicycle.dt;
        }
    };
    note_violation(log.initial_h, 0);

    try {
        for (int k = 0; k < cfg.max_steps(); ++k) {
            StepRecord rec;
            rec.step = k;
            rec.time = k * cfg.unicycle.dt;
            rec.true_state = x;
            rec.h_true = center.barrier.value(x);
            rec.r_y = x(1);

            // (1) measurement, (2) update
            rec.measurement_seed = step_seed(master_seed, trial_index, static_cast<std::uint64_t>(k), Stream::Measurement);
            const VectorXd y = ekf.measurement.observe(x) +
                               gaussian_draw(VectorXd::Zero(2), cfg.measurement_cov, rec.measurement_seed);
            rec.measurement = y;
            belief = ekf_update(belief, y, ekf);
            rec.estimate = belief.mean();
            rec.covariance = belief.covariance();
            rec.cov_trace = belief.covariance().trace();
            rec.cov_max_eig = belief.max_eigenvalue();

            // (4) nominal control
            // the controller steers the same point the goal test measures
            const VectorXd steered = cfg.goal_point == ReferencePoint::Shifted ? to_shifted_point(belief.mean(), ell)
                                                                               : belief.mean();
            rec.u_des = nominal_pid(steered, cfg.goal, cfg.k_v, cfg.k_w, box);

            // (3) particles and (5) filter
            rec.particle_seed = step_seed(master_seed, trial_index, static_cast<std::uint64_t>(k), Stream::FilterParticles);
            if (method == Method::Deterministic) {
                const auto det = deterministic_cbf_filter(p_model, fence, to_shifted_point(belief.mean(), ell),
                                                          VectorXd::Zero(3), rec.u_des, cfg.gamma, box);
                rec.u = det.u;
                rec.det_constraint = det.constraint_value;
                rec.fallback = det.fallback_used;
                rec.feasible = !det.fallback_used && det.constraint_value <= 1e-8;
            } else {
                const ParticleSet particles =
                    to_shifted_point(sample_particles(belief, disturbance, static_cast<Eigen::Index>(cfg.particles),
                                                      rec.particle_seed),
                                     ell);
                const AffineIncrementSet inc = affine_increment_coefficients(p_model, fence, particles, cfg.gamma);
                FilterOutcome out;
                if (method == Method::SubGaussian) {
                    rec.sigma_bar = subgaussian_parameter(lip, rec.cov_max_eig, lambda_d);
                    out = filter_control(inc, rec.u_des, risk, rec.sigma_bar, box, cfg.filter);
                } else {
                    rec.support_max = box_support_max(inc, box, dkw_sigmas);
                    out = dkw_cbf_filter(inc, rec.u_des, risk, rec.support_max, box, cfg.filter);
                }
                rec.u = out.u;
                rec.bound = out.certificate.bound;
                rec.empirical_cvar = out.certificate.empirical_cvar;
                rec.tail_term = out.certificate.tail_term;
                rec.band_term = out.certificate.band_term;
                rec.bound_at_desired = out.bound_at_desired;
                rec.feasible = out.feasible;
                rec.fallback = out.fallback_used;

                // (6) a-posteriori check on an independent particle set
                if (method == Method::SubGaussian && cfg.verify) {
                    rec.verify_seed = step_seed(master_seed, trial_index, static_cast<std::uint64_t>(k), Stream::VerifyParticles);
                    if (rec.verify_seed == rec.particle_seed)
                        throw Error(ErrorCode::InvalidInput, "verification seed collides with the filter seed");
                    const ParticleSet fresh = to_shifted_point(
                        sample_particles(belief, disturbance, static_cast<Eigen::Index>(cfg.particles), rec.verify_seed), ell);
                    const AffineIncrementSet finc = affine_increment_coefficients(p_model, fence, fresh, cfg.gamma);
                    const auto report = verify_certificate(SampleVector::from_eigen(finc.evaluate(rec.u)), out.certificate);
                    rec.verify_bound = report.fresh_bound;
                    rec.verify_pass = report.passed ? 1 : 0;
                }
            }

            // (7) truth
            rec.noise_seed = step_seed(master_seed, trial_index, static_cast<std::uint64_t>(k), Stream::ProcessNoise);
            const VectorXd d = gaussian_draw(VectorXd::Zero(3), cfg.disturbance_cov, rec.noise_seed);
            x = center.model.step(x, rec.u, d);
            rec.h_true_next = center.barrier.value(x);
            rec.r_y_next = x(1);
            note_violation(safety_value(x), k + 1);

            // (8) predict
            belief = ekf_predict(belief, center.model, rec.u, disturbance);
            log.steps.push_back(std::move(rec));

            if (at_goal(x)) {
                log.reached = true;
                log.reach_step = k + 1;
                break;
            }
        }
    } catch (const std::exception& e) {
        log.error = e.what();
    }
    log.final_state = x;
    log.outcome = log.violated ? TrialOutcome::Violated
                               : (log.reached ? TrialOutcome::ReachedGoal : TrialOutcome::TimedOut);
    return log;
}

} // namespace pcbf
