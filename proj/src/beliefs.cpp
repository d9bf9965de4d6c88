#include "pcbf/beliefs.hpp"

#include <random>
#include <vector>

#include "pcbf/error.hpp"
#include "pcbf/rng.hpp"

namespace pcbf {

void check_covariance(const MatrixXd& covariance) {
    if (covariance.rows() != covariance.cols())
        throw Error(ErrorCode::InvalidInput, "covariance must be square");
    if (!covariance.allFinite())
        throw Error(ErrorCode::InvalidInput, "covariance has non-finite entries");
    if (covariance.size() == 0) return;
    const double asym = (covariance - covariance.transpose()).cwiseAbs().maxCoeff();
    if (asym > kSymmetryTol)
        throw Error(ErrorCode::InvalidInput,
                    "covariance asymmetric by " + std::to_string(asym));
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(covariance, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -kPsdTol)
        throw Error(ErrorCode::NotPSD,
                    "smallest eigenvalue " + std::to_string(eig.eigenvalues().minCoeff()));
}

GaussianBelief::GaussianBelief(VectorXd mean, MatrixXd covariance)
    : mean_(std::move(mean)), covariance_(std::move(covariance)) {
    if (mean_.size() != covariance_.rows())
        throw Error(ErrorCode::InvalidInput, "mean and covariance dimensions differ");
    if (!mean_.allFinite()) throw Error(ErrorCode::InvalidInput, "mean has non-finite entries");
    check_covariance(covariance_);
}

GaussianBelief GaussianBelief::point(VectorXd mean) {
    const auto n = mean.size();
    return GaussianBelief(std::move(mean), MatrixXd::Zero(n, n));
}

double GaussianBelief::max_eigenvalue() const {
    if (dim() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(covariance_, Eigen::EigenvaluesOnly);
    return std::max(0.0, eig.eigenvalues().maxCoeff());
}

CholeskyFactor cholesky_psd(const MatrixXd& covariance) {
    check_covariance(covariance);
    const auto n = covariance.rows();
    CholeskyFactor out{MatrixXd::Zero(n, n), 0.0};

    // Rows that are identically zero are deterministic coordinates.
    std::vector<Eigen::Index> active;
    for (Eigen::Index i = 0; i < n; ++i)
        if (covariance.row(i).cwiseAbs().maxCoeff() != 0.0) active.push_back(i);
    if (active.empty()) return out;

    const auto k = static_cast<Eigen::Index>(active.size());
    MatrixXd sub(k, k);
    for (Eigen::Index r = 0; r < k; ++r)
        for (Eigen::Index c = 0; c < k; ++c) sub(r, c) = covariance(active[r], active[c]);
    sub = 0.5 * (sub + sub.transpose());

    Eigen::LLT<MatrixXd> llt(sub);
    MatrixXd l;
    if (llt.info() == Eigen::Success) {
        l = llt.matrixL();
    } else {
        // Clip tiny negative eigenvalues, then shift.
        Eigen::SelfAdjointEigenSolver<MatrixXd> eig(sub);
        const VectorXd clipped = eig.eigenvalues().cwiseMax(0.0);
        MatrixXd repaired = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
        repaired = 0.5 * (repaired + repaired.transpose());
        repaired.diagonal().array() += kCholeskyJitter;
        Eigen::LLT<MatrixXd> retry(repaired);
        if (retry.info() != Eigen::Success)
            throw Error(ErrorCode::NotPSD, "factorization failed after jitter");
        l = retry.matrixL();
        out.jitter = kCholeskyJitter;
    }
    for (Eigen::Index r = 0; r < k; ++r)
        for (Eigen::Index c = 0; c <= r; ++c) out.lower(active[r], active[c]) = l(r, c);
    return out;
}

ParticleSet sample_particles(const GaussianBelief& state_belief,
                             const GaussianBelief& disturbance_belief, Eigen::Index n,
                             std::uint64_t seed) {
    if (n < 1) throw Error(ErrorCode::InvalidInput, "particle count must be >= 1");
    const MatrixXd lx = cholesky_psd(state_belief.covariance()).lower;
    const MatrixXd ld = cholesky_psd(disturbance_belief.covariance()).lower;
    const auto nx = state_belief.dim();
    const auto nd = disturbance_belief.dim();

    // Standard normals are drawn row by row: state block, then disturbance block.
    MatrixXd zx(n, nx), zd(n, nd);
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < nx; ++j) zx(i, j) = normal(rng);
        for (Eigen::Index j = 0; j < nd; ++j) zd(i, j) = normal(rng);
    }

    ParticleSet p;
    p.seed = seed;
    p.states = (zx * lx.transpose()).rowwise() + state_belief.mean().transpose();
    p.disturbances = (zd * ld.transpose()).rowwise() + disturbance_belief.mean().transpose();
    return p;
}

} // namespace pcbf
