#pragma once

#include <functional>
#include <optional>

#include <Eigen/Dense>

#include "pcbf/beliefs.hpp"
#include "pcbf/concentration.hpp"
#include "pcbf/cvar.hpp"

namespace pcbf {

/// Axis-aligned admissible control set.
struct ControlBox {
    VectorXd lower;
    VectorXd upper;

    Eigen::Index dim() const { return lower.size(); }
    bool contains(const VectorXd& u, double tol = 0.0) const;
    VectorXd clamp(const VectorXd& u) const;
    /// sup of ||u|| over the box.
    double max_norm() const;
    /// All 2^dim vertices.
    std::vector<VectorXd> corners() const;
    void validate() const;
};

/// x+ = f(x) + g(x) u + d.
struct ControlAffineModel {
    Eigen::Index state_dim = 0;
    Eigen::Index control_dim = 0;
    std::function<VectorXd(const VectorXd&)> drift;
    std::function<MatrixXd(const VectorXd&)> actuation;
    /// Optional analytic d(f + g u)/dx; central differences are used when unset.
    std::function<MatrixXd(const VectorXd&, const VectorXd&)> state_jacobian;
    LipschitzData lipschitz;

    VectorXd step(const VectorXd& x, const VectorXd& u, const VectorXd& d) const;
    MatrixXd jacobian(const VectorXd& x, const VectorXd& u) const;
};

/// h(x) = c.x + c0.
struct AffineBarrier {
    VectorXd c;
    double c0 = 0.0;
};

/// Safe set is {x : h(x) <= 0}.
struct BarrierFunction {
    std::function<double(const VectorXd&)> value;
    double L_h = 0.0;
    std::optional<AffineBarrier> affine_rep;
};

BarrierFunction affine_barrier(VectorXd c, double c0);

/// Per-particle increments dh_i(u) = a_i + b_i . u.
struct AffineIncrementSet {
    VectorXd a;
    MatrixXd b; // n x n_u

    Eigen::Index size() const { return a.size(); }
    VectorXd evaluate(const VectorXd& u) const { return a + b * u; }
};

/// Row i is f(x_i) + g(x_i) u + d_i.
MatrixXd propagate_particles(const ControlAffineModel& model, const ParticleSet& particles,
                             const VectorXd& u);

/// h(x_i+) - gamma h(x_i) for every particle.
SampleVector barrier_increments(const ControlAffineModel& model, const BarrierFunction& barrier,
                                const ParticleSet& particles, const VectorXd& u, double gamma);

/// Exact affine-in-u coefficients; requires barrier.affine_rep.
AffineIncrementSet affine_increment_coefficients(const ControlAffineModel& model,
                                                 const BarrierFunction& barrier,
                                                 const ParticleSet& particles, double gamma);

// --- Unicycle with a shifted reference point ------------------------------

struct UnicycleConfig {
    double ell = 0.1;                   // offset of the reference point [m]
    double v_max = 0.3;                 // [m/s]
    double omega_max = 0.67;            // [rad/s]
    double wheelbase = 2.5;             // [m], informational
    double steer_max = 40.0 * M_PI / 180.0; // [rad], informational
    double dt = 0.5;                    // [s]

    void validate() const;
    ControlBox box() const;
    /// v_max tan(steer_max) / wheelbase; differs from omega_max at the defaults.
    double ackermann_omega() const;
};

/// Center-state Euler model x = [r_x, r_y, theta] and the geofence evaluated
/// at the shifted point, h(x) = r_y + ell sin(theta).
struct UnicycleModel {
    ControlAffineModel model;
    BarrierFunction barrier;
};

UnicycleModel unicycle_model(const UnicycleConfig& cfg);

/// Model of the shifted point state [p_x, p_y, theta]:
/// p+ = p + dt R(theta) diag(1, ell) u, theta+ = theta + dt omega.
ControlAffineModel shifted_point_model(const UnicycleConfig& cfg);

/// h(p) = p_y.
BarrierFunction shifted_point_geofence();

VectorXd to_shifted_point(const VectorXd& center, double ell);
ParticleSet to_shifted_point(const ParticleSet& center_particles, double ell);

/// Largest singular value of the center-to-shifted-point Jacobian.
double shifted_point_map_lipschitz(double ell);

/// Lipschitz data of the shifted-point increment as a function of the
/// center state; gamma and C are filled from the arguments.
LipschitzData unicycle_increment_lipschitz(const UnicycleConfig& cfg, double gamma, double C);

} // namespace pcbf
