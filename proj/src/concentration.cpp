#include "pcbf/concentration.hpp"

#include <string>

#include "pcbf/error.hpp"

namespace pcbf {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorCode::InvalidInput, what);
}

} // namespace

void LipschitzData::validate() const {
    require(std::isfinite(L_f) && L_f >= 0.0, "L_f must be finite and >= 0");
    require(std::isfinite(L_g) && L_g >= 0.0, "L_g must be finite and >= 0");
    require(std::isfinite(L_h) && L_h >= 0.0, "L_h must be finite and >= 0");
    require(std::isfinite(u_max) && u_max >= 0.0, "u_max must be finite and >= 0");
    require(gamma >= 0.0 && gamma <= 1.0, "gamma must lie in [0, 1]");
    require(std::isfinite(C) && C > 0.0, "C must be finite and > 0");
}

RiskConfig::RiskConfig(double alpha, double delta, std::size_t n, double gamma,
                       std::size_t horizon, double total_risk)
    : alpha_(alpha), delta_(delta), n_(n), gamma_(gamma), horizon_(horizon),
      total_risk_(total_risk) {
    require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
    require(delta > 0.0 && delta <= 0.5, "delta must lie in (0, 0.5]");
    require(n >= 1, "n must be >= 1");
    require(gamma >= 0.0 && gamma <= 1.0, "gamma must lie in [0, 1]");
    require(horizon >= 1, "horizon must be >= 1");
    require(total_risk > 0.0 && total_risk < 1.0, "total risk must lie in (0, 1)");
    const double eps = dkw_epsilon(n, delta);
    if (eps >= 0.5)
        throw Error(ErrorCode::EpsilonTooLarge,
                    "eps_n(delta) = " + std::to_string(eps) + " >= 0.5; need n > 2 ln(2/delta)");
    if (alpha <= eps)
        throw Error(ErrorCode::InvalidAlpha,
                    "alpha must exceed eps_n(delta) = " + std::to_string(eps));
}

double RiskConfig::band() const { return dkw_epsilon(n_, delta_); }

RiskConfig RiskConfig::with_n(std::size_t n) const {
    return RiskConfig(alpha_, delta_, n, gamma_, horizon_, total_risk_);
}

double subgaussian_parameter(const LipschitzData& lip, double sigma_x_max_eig,
                             double sigma_d_max_eig) {
    lip.validate();
    require(sigma_x_max_eig >= 0.0 && sigma_d_max_eig >= 0.0,
            "covariance eigenvalues must be >= 0");
    const double lx = lip.L_h * (lip.L_f + lip.L_g * lip.u_max + std::abs(lip.gamma));
    const double ld = lip.L_h;
    return lip.C * std::sqrt(lx * lx * sigma_x_max_eig + ld * ld * sigma_d_max_eig);
}

double dkw_epsilon(std::size_t n, double delta) {
    require(n >= 1, "n must be >= 1");
    require(delta > 0.0 && delta <= 0.5, "delta must lie in (0, 0.5]");
    return std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(n)));
}

double tail_correction(double sigma_bar, std::size_t n, double delta, double alpha) {
    require(sigma_bar >= 0.0 && std::isfinite(sigma_bar), "sigma_bar must be finite and >= 0");
    require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
    const double eps = dkw_epsilon(n, delta);
    if (eps >= 0.5)
        throw Error(ErrorCode::EpsilonTooLarge,
                    "tail bound requires eps_n(delta) < 0.5, got " + std::to_string(eps));
    return sigma_bar * eps / (alpha * std::sqrt(2.0 * std::log(1.0 / eps)));
}

double per_step_alpha(double epsilon, std::size_t horizon) {
    require(epsilon > 0.0 && epsilon < 1.0, "epsilon must lie in (0, 1)");
    require(horizon >= 1, "horizon must be >= 1");
    if (horizon == 1) return epsilon;
    return 1.0 - std::pow(1.0 - epsilon, 1.0 / static_cast<double>(horizon));
}

} // namespace pcbf
