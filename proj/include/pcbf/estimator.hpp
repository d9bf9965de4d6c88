#pragma once

#include <functional>
#include <vector>

#include "pcbf/beliefs.hpp"
#include "pcbf/dynamics.hpp"

namespace pcbf {

/// y = h(x) + v, v ~ N(0, R).
struct MeasurementModel {
    std::function<VectorXd(const VectorXd&)> observe;
    std::function<MatrixXd(const VectorXd&)> jacobian;
    std::vector<Eigen::Index> angle_components; // innovation entries wrapped to (-pi, pi]
};

/// Linear measurement y = H x.
MeasurementModel linear_measurement(MatrixXd H, std::vector<Eigen::Index> angle_components = {});

/// Observes [r_y, theta] of a unicycle state, with the heading wrapped.
MeasurementModel unicycle_measurement();

struct EkfConfig {
    MatrixXd Q;  // process noise
    MatrixXd R;  // measurement noise, positive definite
    MatrixXd P0; // initial covariance
    MeasurementModel measurement;

    void validate() const;
};

/// Wraps to (-pi, pi].
double wrap_angle(double angle);

/// Mean through the discrete map plus the disturbance mean; covariance
/// J P J^T + Sigma_d with J the state Jacobian at (mu, u).
GaussianBelief ekf_predict(const GaussianBelief& belief, const ControlAffineModel& model,
                           const VectorXd& u, const GaussianBelief& disturbance);

/// Same with a zero-mean disturbance of covariance Q.
GaussianBelief ekf_predict(const GaussianBelief& belief, const ControlAffineModel& model,
                           const VectorXd& u, const MatrixXd& Q);

/// Kalman update with Joseph-form covariance and symmetrization.
GaussianBelief ekf_update(const GaussianBelief& belief, const VectorXd& measurement,
                          const EkfConfig& cfg);

} // namespace pcbf
