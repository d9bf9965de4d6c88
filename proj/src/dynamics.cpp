#include "pcbf/dynamics.hpp"

#include <cmath>

#include "pcbf/error.hpp"

namespace pcbf {

bool ControlBox::contains(const VectorXd& u, double tol) const {
    return u.size() == dim() && (u.array() >= lower.array() - tol).all() &&
           (u.array() <= upper.array() + tol).all();
}

VectorXd ControlBox::clamp(const VectorXd& u) const { return u.cwiseMax(lower).cwiseMin(upper); }

double ControlBox::max_norm() const {
    return lower.cwiseAbs().cwiseMax(upper.cwiseAbs()).norm();
}

std::vector<VectorXd> ControlBox::corners() const {
    const auto d = dim();
    std::vector<VectorXd> out;
    for (unsigned mask = 0; mask < (1u << d); ++mask) {
        VectorXd c(d);
        for (Eigen::Index j = 0; j < d; ++j) c(j) = (mask >> j) & 1u ? upper(j) : lower(j);
        out.push_back(std::move(c));
    }
    return out;
}

void ControlBox::validate() const {
    if (lower.size() != upper.size())
        throw Error(ErrorCode::DimensionMismatch, "box bounds differ in size");
    if (!lower.allFinite() || !upper.allFinite())
        throw Error(ErrorCode::InvalidInput, "control box must be bounded");
    if ((lower.array() > upper.array()).any())
        throw Error(ErrorCode::InvalidInput, "box lower bound exceeds upper bound");
}

VectorXd ControlAffineModel::step(const VectorXd& x, const VectorXd& u, const VectorXd& d) const {
    if (x.size() != state_dim || u.size() != control_dim || d.size() != state_dim)
        throw Error(ErrorCode::DimensionMismatch, "model step dimensions");
    return drift(x) + actuation(x) * u + d;
}

MatrixXd ControlAffineModel::jacobian(const VectorXd& x, const VectorXd& u) const {
    if (state_jacobian) return state_jacobian(x, u);
    MatrixXd j(state_dim, state_dim);
    const VectorXd zero = VectorXd::Zero(state_dim);
    for (Eigen::Index k = 0; k < state_dim; ++k) {
        const double h = 1e-6 * std::max(1.0, std::abs(x(k)));
        VectorXd xp = x, xm = x;
        xp(k) += h;
        xm(k) -= h;
        j.col(k) = (step(xp, u, zero) - step(xm, u, zero)) / (2.0 * h);
    }
    return j;
}

BarrierFunction affine_barrier(VectorXd c, double c0) {
    BarrierFunction b;
    b.L_h = c.norm();
    b.value = [c, c0](const VectorXd& x) { return c.dot(x) + c0; };
    b.affine_rep = AffineBarrier{std::move(c), c0};
    return b;
}

namespace {

void check_particles(const ControlAffineModel& model, const ParticleSet& particles,
                     const VectorXd* u) {
    if (particles.states.cols() != model.state_dim ||
        particles.disturbances.cols() != model.state_dim ||
        particles.states.rows() != particles.disturbances.rows())
        throw Error(ErrorCode::DimensionMismatch, "particle set does not match model");
    if (u && u->size() != model.control_dim)
        throw Error(ErrorCode::DimensionMismatch, "control dimension");
}

} // namespace

MatrixXd propagate_particles(const ControlAffineModel& model, const ParticleSet& particles,
                             const VectorXd& u) {
    check_particles(model, particles, &u);
    MatrixXd next(particles.size(), model.state_dim);
    for (Eigen::Index i = 0; i < particles.size(); ++i) {
        const VectorXd x = particles.states.row(i).transpose();
        next.row(i) = (model.drift(x) + model.actuation(x) * u +
                       particles.disturbances.row(i).transpose())
                          .transpose();
    }
    return next;
}

SampleVector barrier_increments(const ControlAffineModel& model, const BarrierFunction& barrier,
                                const ParticleSet& particles, const VectorXd& u, double gamma) {
    const MatrixXd next = propagate_particles(model, particles, u);
    std::vector<double> out(static_cast<std::size_t>(particles.size()));
    for (Eigen::Index i = 0; i < particles.size(); ++i)
        out[static_cast<std::size_t>(i)] =
            barrier.value(next.row(i).transpose()) -
            gamma * barrier.value(particles.states.row(i).transpose());
    return SampleVector(std::move(out));
}

AffineIncrementSet affine_increment_coefficients(const ControlAffineModel& model,
                                                 const BarrierFunction& barrier,
                                                 const ParticleSet& particles, double gamma) {
    if (!barrier.affine_rep)
        throw Error(ErrorCode::BarrierNotAffine, "barrier has no affine representation");
    check_particles(model, particles, nullptr);
    const auto& [c, c0] = *barrier.affine_rep;
    if (c.size() != model.state_dim)
        throw Error(ErrorCode::DimensionMismatch, "barrier gradient dimension");
    const auto n = particles.size();
    AffineIncrementSet out{VectorXd(n), MatrixXd(n, model.control_dim)};
    for (Eigen::Index i = 0; i < n; ++i) {
        const VectorXd x = particles.states.row(i).transpose();
        const VectorXd d = particles.disturbances.row(i).transpose();
        // h(f + g u + d) - gamma h(x) = [c.(f + d) + c0 - gamma (c.x + c0)] + (c^T g) u
        out.a(i) = c.dot(model.drift(x) + d) + c0 - gamma * (c.dot(x) + c0);
        out.b.row(i) = c.transpose() * model.actuation(x);
    }
    return out;
}

// --- Unicycle ---------------------------------------------------------------

void UnicycleConfig::validate() const {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!(positive(ell) && positive(v_max) && positive(omega_max) && positive(wheelbase) &&
          positive(steer_max) && positive(dt)))
        throw Error(ErrorCode::InvalidInput, "unicycle parameters must be positive");
}

ControlBox UnicycleConfig::box() const {
    return ControlBox{Eigen::Vector2d(-v_max, -omega_max), Eigen::Vector2d(v_max, omega_max)};
}

double UnicycleConfig::ackermann_omega() const { return v_max * std::tan(steer_max) / wheelbase; }

UnicycleModel unicycle_model(const UnicycleConfig& cfg) {
    cfg.validate();
    const double dt = cfg.dt;
    const double ell = cfg.ell;

    ControlAffineModel m;
    m.state_dim = 3;
    m.control_dim = 2;
    m.drift = [](const VectorXd& x) { return x; };
    m.actuation = [dt](const VectorXd& x) {
        MatrixXd g = MatrixXd::Zero(3, 2);
        g(0, 0) = dt * std::cos(x(2));
        g(1, 0) = dt * std::sin(x(2));
        g(2, 1) = dt;
        return g;
    };
    m.state_jacobian = [dt](const VectorXd& x, const VectorXd& u) {
        MatrixXd j = MatrixXd::Identity(3, 3);
        j(0, 2) = -dt * u(0) * std::sin(x(2));
        j(1, 2) = dt * u(0) * std::cos(x(2));
        return j;
    };
    // ||g(x1) - g(x2)||_op = dt |cos - cos, sin - sin| <= dt |theta1 - theta2|
    m.lipschitz.L_f = 1.0;
    m.lipschitz.L_g = dt;
    m.lipschitz.u_max = cfg.box().max_norm();

    BarrierFunction h;
    h.value = [ell](const VectorXd& x) { return x(1) + ell * std::sin(x(2)); };
    h.L_h = std::sqrt(1.0 + ell * ell);
    m.lipschitz.L_h = h.L_h;
    return {std::move(m), std::move(h)};
}

ControlAffineModel shifted_point_model(const UnicycleConfig& cfg) {
    cfg.validate();
    const double dt = cfg.dt;
    const double ell = cfg.ell;
    ControlAffineModel m;
    m.state_dim = 3;
    m.control_dim = 2;
    m.drift = [](const VectorXd& x) { return x; };
    m.actuation = [dt, ell](const VectorXd& x) {
        const double c = std::cos(x(2)), s = std::sin(x(2));
        MatrixXd g(3, 2);
        g << dt * c, -dt * ell * s,
             dt * s, dt * ell * c,
             0.0, dt;
        return g;
    };
    m.state_jacobian = [dt, ell](const VectorXd& x, const VectorXd& u) {
        const double c = std::cos(x(2)), s = std::sin(x(2));
        MatrixXd j = MatrixXd::Identity(3, 3);
        j(0, 2) = dt * (-s * u(0) - ell * c * u(1));
        j(1, 2) = dt * (c * u(0) - ell * s * u(1));
        return j;
    };
    m.lipschitz.L_f = 1.0;
    m.lipschitz.L_g = dt * std::max(1.0, ell);
    m.lipschitz.L_h = 1.0;
    m.lipschitz.u_max = cfg.box().max_norm();
    return m;
}

BarrierFunction shifted_point_geofence() { return affine_barrier(Eigen::Vector3d(0.0, 1.0, 0.0), 0.0); }

VectorXd to_shifted_point(const VectorXd& center, double ell) {
    VectorXd p = center;
    p(0) += ell * std::cos(center(2));
    p(1) += ell * std::sin(center(2));
    return p;
}

ParticleSet to_shifted_point(const ParticleSet& center_particles, double ell) {
    ParticleSet p = center_particles;
    p.states.col(0).array() += ell * center_particles.states.col(2).array().cos();
    p.states.col(1).array() += ell * center_particles.states.col(2).array().sin();
    return p;
}

double shifted_point_map_lipschitz(double ell) { return 0.5 * (ell + std::sqrt(4.0 + ell * ell)); }

LipschitzData unicycle_increment_lipschitz(const UnicycleConfig& cfg, double gamma, double C) {
    // Phi(x, d) = h_p(F_p(T(x), u, d)) - gamma h_p(T(x)) with T the shifted-point
    // map. Folding L_T into L_h scales the state term exactly and the
    // disturbance term conservatively.
    LipschitzData lip = shifted_point_model(cfg).lipschitz;
    lip.L_h = shifted_point_map_lipschitz(cfg.ell);
    lip.gamma = gamma;
    lip.C = C;
    return lip;
}

} // namespace pcbf
