#include "pcbf/estimator.hpp"

#include <cmath>

#include "pcbf/error.hpp"

namespace pcbf {

MeasurementModel linear_measurement(MatrixXd H, std::vector<Eigen::Index> angle_components) {
    MeasurementModel m;
    m.observe = [H](const VectorXd& x) { return VectorXd(H * x); };
    m.jacobian = [H](const VectorXd&) { return H; };
    m.angle_components = std::move(angle_components);
    return m;
}

MeasurementModel unicycle_measurement() {
    MatrixXd H = MatrixXd::Zero(2, 3);
    H(0, 1) = 1.0;
    H(1, 2) = 1.0;
    return linear_measurement(std::move(H), {1});
}

void EkfConfig::validate() const {
    check_covariance(Q);
    check_covariance(R);
    check_covariance(P0);
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(R, Eigen::EigenvaluesOnly);
    if (R.rows() > 0 && eig.eigenvalues().minCoeff() <= 0.0)
        throw Error(ErrorCode::InvalidInput, "measurement covariance must be positive definite");
    if (!measurement.observe || !measurement.jacobian)
        throw Error(ErrorCode::InvalidInput, "measurement model is incomplete");
}

double wrap_angle(double angle) {
    double a = std::remainder(angle, 2.0 * M_PI); // [-pi, pi]
    if (a <= -M_PI) a += 2.0 * M_PI;
    return a;
}

GaussianBelief ekf_predict(const GaussianBelief& belief, const ControlAffineModel& model, const VectorXd& u,
                           const GaussianBelief& disturbance) {
    if (belief.dim() != model.state_dim || disturbance.dim() != model.state_dim)
        throw Error(ErrorCode::DimensionMismatch, "belief and model dimensions");
    const VectorXd mean = model.step(belief.mean(), u, disturbance.mean());
    const MatrixXd J = model.jacobian(belief.mean(), u);
    MatrixXd P = J * belief.covariance() * J.transpose() + disturbance.covariance();
    P = 0.5 * (P + P.transpose());
    return GaussianBelief(mean, P);
}

GaussianBelief ekf_predict(const GaussianBelief& belief, const ControlAffineModel& model, const VectorXd& u,
                           const MatrixXd& Q) {
    return ekf_predict(belief, model, u, GaussianBelief(VectorXd::Zero(belief.dim()), Q));
}

GaussianBelief ekf_update(const GaussianBelief& belief, const VectorXd& measurement, const EkfConfig& cfg) {
    const VectorXd& x = belief.mean();
    const MatrixXd& P = belief.covariance();
    const MatrixXd H = cfg.measurement.jacobian(x);
    if (H.rows() == 0) return belief;
    if (H.cols() != belief.dim() || measurement.size() != H.rows() || cfg.R.rows() != H.rows())
        throw Error(ErrorCode::DimensionMismatch, "measurement dimensions");
    if (!measurement.allFinite()) throw Error(ErrorCode::InvalidInput, "non-finite measurement");

    VectorXd innovation = measurement - cfg.measurement.observe(x);
    for (auto k : cfg.measurement.angle_components) innovation(k) = wrap_angle(innovation(k));

    const MatrixXd S = H * P * H.transpose() + cfg.R;
    Eigen::LDLT<MatrixXd> ldlt(S);
    const double smax = S.cwiseAbs().maxCoeff();
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        smax == 0.0 || ldlt.vectorD().minCoeff() <= 1e-14 * smax)
        throw Error(ErrorCode::SingularInnovation, "innovation covariance is numerically singular");
    const MatrixXd K = ldlt.solve(H * P).transpose();

    VectorXd mean = x + K * innovation;
    const MatrixXd IKH = MatrixXd::Identity(x.size(), x.size()) - K * H;
    MatrixXd Pn = IKH * P * IKH.transpose() + K * cfg.R * K.transpose();
    Pn = 0.5 * (Pn + Pn.transpose());
    return GaussianBelief(std::move(mean), std::move(Pn));
}

} // namespace pcbf
