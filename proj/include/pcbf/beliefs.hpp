#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace pcbf {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr double kSymmetryTol = 1e-10;
inline constexpr double kPsdTol = 1e-10;
inline constexpr double kCholeskyJitter = 1e-12;

/// Mean and covariance of a Gaussian state or disturbance.
class GaussianBelief {
public:
    /// Throws InvalidInput on dimension mismatch or asymmetry, NotPSD on a
    /// negative eigenvalue below -1e-10.
    GaussianBelief(VectorXd mean, MatrixXd covariance);

    static GaussianBelief point(VectorXd mean);

    const VectorXd& mean() const { return mean_; }
    const MatrixXd& covariance() const { return covariance_; }
    Eigen::Index dim() const { return mean_.size(); }

    double max_eigenvalue() const;

private:
    VectorXd mean_;
    MatrixXd covariance_;
};

struct CholeskyFactor {
    MatrixXd lower;
    double jitter = 0.0; // diagonal shift applied before factorizing
};

/// Lower-triangular factor of a symmetric PSD matrix. Exactly-zero
/// rows/columns are left zero; any remaining rank deficiency is handled by
/// adding kCholeskyJitter to the diagonal, recorded in the result.
CholeskyFactor cholesky_psd(const MatrixXd& covariance);

/// i.i.d. joint draws of (state, disturbance). Rows are particles.
struct ParticleSet {
    MatrixXd states;
    MatrixXd disturbances;
    std::uint64_t seed = 0;

    Eigen::Index size() const { return states.rows(); }
};

ParticleSet sample_particles(const GaussianBelief& state_belief,
                             const GaussianBelief& disturbance_belief, Eigen::Index n,
                             std::uint64_t seed);

/// Symmetrizes and validates a covariance; shared by the estimator.
void check_covariance(const MatrixXd& covariance);

} // namespace pcbf
