#include <doctest.h>

#include <random>

#include "../support/kalman_oracle.hpp"
#include "pcbf/error.hpp"
#include "pcbf/estimator.hpp"

using namespace pcbf;

namespace {

bool symmetric_psd(const MatrixXd& P) {
    if ((P - P.transpose()).norm() > 1e-12 * std::max(1.0, P.norm())) return false;
    return Eigen::SelfAdjointEigenSolver<MatrixXd>(P).eigenvalues().minCoeff() >= -1e-12;
}

ControlAffineModel linear_model(const MatrixXd& F, const MatrixXd& B) {
    ControlAffineModel m;
    m.state_dim = F.rows();
    m.control_dim = B.cols();
    m.drift = [F](const VectorXd& x) { return VectorXd(F * x); };
    m.actuation = [B](const VectorXd&) { return B; };
    m.state_jacobian = [F](const VectorXd&, const VectorXd&) { return F; };
    return m;
}

EkfConfig config_with(const MeasurementModel& meas, const MatrixXd& R, Eigen::Index n) {
    EkfConfig cfg;
    cfg.Q = MatrixXd::Zero(n, n);
    cfg.R = R;
    cfg.P0 = MatrixXd::Identity(n, n);
    cfg.measurement = meas;
    return cfg;
}

} // namespace

TEST_SUITE("estimator") {

TEST_CASE("prediction through a linear model") {
    MatrixXd F(2, 2);
    F << 1.0, 0.5, 0.0, 1.0;
    const auto m = linear_model(F, MatrixXd(Eigen::Vector2d(0.0, 1.0)));
    MatrixXd P(2, 2);
    P << 2.0, 0.3, 0.3, 1.0;
    const GaussianBelief b(Eigen::Vector2d(1.0, -1.0), P);
    const auto out = ekf_predict(b, m, VectorXd::Constant(1, 0.2), MatrixXd::Zero(2, 2));
    CHECK((out.covariance() - F * P * F.transpose()).norm() <= 1e-12);
    CHECK((out.mean() - (F * b.mean() + Eigen::Vector2d(0.0, 0.2))).norm() <= 1e-12);

    const auto ident = linear_model(MatrixXd::Identity(2, 2), MatrixXd::Zero(2, 1));
    const auto q = ekf_predict(b, ident, VectorXd::Zero(1), 0.01 * MatrixXd::Identity(2, 2));
    CHECK((q.covariance() - (P + 0.01 * MatrixXd::Identity(2, 2))).norm() <= 1e-14);

    const GaussianBelief dist(Eigen::Vector2d(0.1, 0.0), 0.01 * MatrixXd::Identity(2, 2));
    const auto withmean = ekf_predict(b, ident, VectorXd::Zero(1), dist);
    CHECK((withmean.mean() - Eigen::Vector2d(1.1, -1.0)).norm() <= 1e-14);
}

TEST_CASE("unicycle Jacobian agrees with finite differences") {
    const auto uni = unicycle_model(UnicycleConfig{});
    const Eigen::Vector3d x(0.0, 0.0, M_PI / 2);
    const Eigen::Vector2d u(0.3, 0.0);
    const MatrixXd J = uni.model.jacobian(x, u);
    CHECK(J(0, 2) == doctest::Approx(-0.15).epsilon(1e-12));
    CHECK(std::abs(J(1, 2)) <= 1e-12);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> a(-M_PI, M_PI), v(-0.3, 0.3), w(-0.67, 0.67);
    for (int rep = 0; rep < 50; ++rep) {
        const Eigen::Vector3d xs(a(rng), a(rng), a(rng));
        const Eigen::Vector2d us(v(rng), w(rng));
        MatrixXd fd(3, 3);
        for (int k = 0; k < 3; ++k) {
            Eigen::Vector3d xp = xs, xm = xs;
            xp(k) += 1e-6;
            xm(k) -= 1e-6;
            fd.col(k) = (uni.model.step(xp, us, Eigen::Vector3d::Zero()) - uni.model.step(xm, us, Eigen::Vector3d::Zero())) / 2e-6;
        }
        CHECK((uni.model.jacobian(xs, us) - fd).cwiseAbs().maxCoeff() <= 1e-5);
    }
}

TEST_CASE("scalar Kalman update by hand") {
    MatrixXd H = MatrixXd::Identity(1, 1);
    const auto cfg = config_with(linear_measurement(H), MatrixXd::Identity(1, 1), 1);
    const GaussianBelief b(VectorXd::Zero(1), MatrixXd::Identity(1, 1));
    const auto out = ekf_update(b, VectorXd::Constant(1, 2.0), cfg);
    CHECK(out.mean()(0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(out.covariance()(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("near-perfect measurements pin the observed components") {
    const auto meas = unicycle_measurement();
    const auto cfg = config_with(meas, 1e-12 * MatrixXd::Identity(2, 2), 3);
    const GaussianBelief b(Eigen::Vector3d(0.2, -0.5, 1.5), 0.01 * MatrixXd::Identity(3, 3));
    const Eigen::Vector2d y(-0.43, 1.62);
    const auto out = ekf_update(b, y, cfg);
    CHECK(std::abs(out.mean()(1) - y(0)) <= 1e-6);
    CHECK(std::abs(out.mean()(2) - y(1)) <= 1e-6);
    CHECK(out.mean()(0) == doctest::Approx(0.2));
    CHECK(symmetric_psd(out.covariance()));
}

TEST_CASE("a measurement with no rows changes nothing") {
    const auto cfg = config_with(linear_measurement(MatrixXd::Zero(0, 3)), MatrixXd::Zero(0, 0), 3);
    const GaussianBelief b(Eigen::Vector3d(1.0, 2.0, 3.0), 0.5 * MatrixXd::Identity(3, 3));
    const auto out = ekf_update(b, VectorXd::Zero(0), cfg);
    CHECK(out.mean() == b.mean());
    CHECK(out.covariance() == b.covariance());
}

TEST_CASE("singular innovation is reported") {
    const auto cfg = config_with(linear_measurement(MatrixXd::Identity(1, 2)), MatrixXd::Zero(1, 1), 2);
    const GaussianBelief b(Eigen::Vector2d(0.0, 0.0), MatrixXd::Zero(2, 2));
    try {
        ekf_update(b, VectorXd::Zero(1), cfg);
        FAIL("expected SingularInnovation");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SingularInnovation);
    }
}

TEST_CASE("configuration validation") {
    auto cfg = config_with(unicycle_measurement(), MatrixXd::Zero(2, 2), 3);
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg.R = 0.01 * MatrixXd::Identity(2, 2);
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("matches a plain Kalman filter on a linear system over 100 steps") {
    MatrixXd F(3, 3), B(3, 1), H(2, 3);
    F << 1.0, 0.1, 0.0, 0.0, 0.95, 0.1, 0.0, -0.05, 0.9;
    B << 0.0, 0.1, 0.5;
    H << 1.0, 0.0, 0.0, 0.0, 0.0, 1.0;
    const MatrixXd Q = Eigen::Vector3d(0.01, 0.02, 0.005).asDiagonal();
    const MatrixXd R = Eigen::Vector2d(0.04, 0.09).asDiagonal();
    const auto model = linear_model(F, B);
    const auto cfg = config_with(linear_measurement(H), R, 3);

    pcbf::testing::LinearKalman kf{F, Q, H, R, Eigen::Vector3d(0.5, -0.2, 0.1), MatrixXd::Identity(3, 3)};
    GaussianBelief belief(kf.x, kf.P);
    std::mt19937_64 rng(10);
    std::normal_distribution<double> nd;
    for (int t = 0; t < 100; ++t) {
        const Eigen::Vector2d y(nd(rng), nd(rng));
        belief = ekf_update(belief, y, cfg);
        kf.update(y);
        CHECK((belief.mean() - kf.x).norm() <= 1e-10);
        CHECK((belief.covariance() - kf.P).norm() <= 1e-10);
        CHECK(symmetric_psd(belief.covariance()));
        const VectorXd u = VectorXd::Constant(1, std::sin(0.1 * t));
        belief = ekf_predict(belief, model, u, Q);
        kf.predict(B * u);
        CHECK((belief.mean() - kf.x).norm() <= 1e-10);
        CHECK((belief.covariance() - kf.P).norm() <= 1e-10);
        CHECK(symmetric_psd(belief.covariance()));
    }
}

TEST_CASE("angle wrapping") {
    CHECK(wrap_angle(M_PI) == doctest::Approx(M_PI));
    CHECK(wrap_angle(-M_PI) == doctest::Approx(M_PI));
    CHECK(wrap_angle(3.0 * M_PI / 2) == doctest::Approx(-M_PI / 2));
    CHECK(wrap_angle(0.25) == 0.25);
    for (double a = -20.0; a < 20.0; a += 0.137) {
        const double w = wrap_angle(a);
        CHECK(w > -M_PI);
        CHECK(w <= M_PI);
        CHECK(std::abs(std::remainder(w - a, 2.0 * M_PI)) <= 1e-12);
    }
}

TEST_CASE("heading innovations near the branch cut stay below pi") {
    const auto cfg = config_with(unicycle_measurement(), Eigen::Vector2d(0.01, 0.01).asDiagonal(), 3);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> off(-0.3, 0.3);
    for (int rep = 0; rep < 200; ++rep) {
        const double est = M_PI - 0.1 + off(rng) * 0.5;
        const double meas = wrap_angle(M_PI + off(rng));
        const GaussianBelief b(Eigen::Vector3d(0.0, 0.0, est), 0.01 * MatrixXd::Identity(3, 3));
        const auto out = ekf_update(b, Eigen::Vector2d(0.0, meas), cfg);
        // gain < 1, so a wrapped innovation moves the heading by less than pi
        CHECK(std::abs(out.mean()(2) - est) < M_PI);
        CHECK(std::abs(std::remainder(meas - est, 2.0 * M_PI)) <= M_PI);
        CHECK(std::abs(out.mean()(2) - est) <= std::abs(std::remainder(meas - est, 2.0 * M_PI)) + 1e-12);
    }
}

TEST_CASE("covariance stays symmetric PSD along a unicycle run") {
    const auto uni = unicycle_model(UnicycleConfig{});
    const auto meas = unicycle_measurement();
    EkfConfig cfg = config_with(meas, Eigen::Vector2d(0.02 * 0.02, 0.07 * 0.07).asDiagonal(), 3);
    cfg.Q = Eigen::Vector3d(1e-4, 1e-4, 0.0025).asDiagonal();
    GaussianBelief b(Eigen::Vector3d(0.0, -0.5, M_PI / 2), Eigen::Vector3d(4e-4, 4e-4, 0.0049).asDiagonal().toDenseMatrix());
    std::mt19937_64 rng(12);
    std::normal_distribution<double> nd;
    for (int t = 0; t < 30; ++t) {
        b = ekf_update(b, Eigen::Vector2d(b.mean()(1) + 0.02 * nd(rng), b.mean()(2) + 0.07 * nd(rng)), cfg);
        CHECK(symmetric_psd(b.covariance()));
        b = ekf_predict(b, uni.model, Eigen::Vector2d(0.2, 0.3 * nd(rng)), cfg.Q);
        CHECK(symmetric_psd(b.covariance()));
    }
}

}
