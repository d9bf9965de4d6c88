#pragma once

// Seeded single-step filtering instances on the shifted-point unicycle,
// with beliefs placed near the geofence so the filter is usually active.

#include <random>

#include "pcbf/sim.hpp"

namespace pcbf::testing {

struct FilterInstance {
    AffineIncrementSet increments;
    VectorXd u_des;
    RiskConfig risk;
    double sigma_bar = 0.0;
    ControlBox box;
};

inline FilterInstance random_filter_instance(std::uint64_t seed, std::size_t n = 500) {
    ScenarioConfig sc;
    sc.particles = n;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ry(-0.35, 0.02), th(0.3, 2.8), uv(-0.3, 0.3), uw(-0.67, 0.67);
    const Eigen::Vector3d mean(0.0, ry(rng), th(rng));
    const GaussianBelief belief(mean, sc.initial_cov);
    const GaussianBelief dist(VectorXd::Zero(3), sc.disturbance_cov);
    const auto particles = sample_particles(belief, dist, static_cast<Eigen::Index>(n), rng());
    const auto shifted = to_shifted_point(particles, sc.unicycle.ell);
    FilterInstance out{affine_increment_coefficients(shifted_point_model(sc.unicycle), shifted_point_geofence(),
                                                     shifted, sc.gamma),
                       Eigen::Vector2d(uv(rng), uw(rng)), RiskConfig(sc.alpha, sc.delta, n, sc.gamma), 0.0,
                       sc.unicycle.box()};
    out.sigma_bar = subgaussian_parameter(scenario_lipschitz(sc), belief.max_eigenvalue(), dist.max_eigenvalue());
    return out;
}

} // namespace pcbf::testing
