#pragma once

// Plain linear Kalman filter, written independently of the estimator
// module (standard covariance update, no Joseph form).

#include <Eigen/Dense>

namespace pcbf::testing {

struct LinearKalman {
    Eigen::MatrixXd F, Q, H, R;
    Eigen::VectorXd x;
    Eigen::MatrixXd P;

    void predict(const Eigen::VectorXd& input_offset) {
        x = F * x + input_offset;
        P = F * P * F.transpose() + Q;
    }
    void update(const Eigen::VectorXd& y) {
        const Eigen::MatrixXd S = H * P * H.transpose() + R;
        const Eigen::MatrixXd K = P * H.transpose() * S.inverse();
        x = x + K * (y - H * x);
        P = (Eigen::MatrixXd::Identity(P.rows(), P.cols()) - K * H) * P;
    }
};

} // namespace pcbf::testing
