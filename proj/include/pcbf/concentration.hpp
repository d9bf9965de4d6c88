#pragma once

#include <cmath>
#include <cstddef>

namespace pcbf {

/// Lipschitz constants of the model/barrier pair plus the constants that
/// enter the sub-Gaussian parameter of the barrier increment.
struct LipschitzData {
    double L_f = 0.0;
    double L_g = 0.0;
    double L_h = 0.0;
    double u_max = 0.0;
    double gamma = 0.0;
    double C = std::sqrt(2.0); // universal sub-Gaussian constant

    void validate() const;
};

/// Risk parameters of one filtering step. Construction enforces
/// eps_n(delta) < 0.5 and alpha > eps_n(delta).
class RiskConfig {
public:
    RiskConfig(double alpha, double delta, std::size_t n, double gamma = 0.0,
               std::size_t horizon = 1, double total_risk = 0.5);

    double alpha() const { return alpha_; }
    double delta() const { return delta_; }
    std::size_t n() const { return n_; }
    double gamma() const { return gamma_; }
    std::size_t horizon() const { return horizon_; }
    double total_risk() const { return total_risk_; }

    /// eps_n(delta) for this configuration.
    double band() const;

    RiskConfig with_n(std::size_t n) const;

private:
    double alpha_;
    double delta_;
    std::size_t n_;
    double gamma_;
    std::size_t horizon_;
    double total_risk_;
};

/// C * sqrt(L_x^2 lmax(Sigma_x) + L_d^2 lmax(Sigma_d)) with
/// L_x = L_h (L_f + L_g u_max + |gamma|) and L_d = L_h.
double subgaussian_parameter(const LipschitzData& lip, double sigma_x_max_eig,
                             double sigma_d_max_eig);

/// Massart's DKW band sqrt(ln(2/delta) / (2n)).
double dkw_epsilon(std::size_t n, double delta);

/// sigma_bar * eps / (alpha * sqrt(2 ln(1/eps))) with eps = dkw_epsilon(n, delta).
double tail_correction(double sigma_bar, std::size_t n, double delta, double alpha);

/// Per-step risk 1 - (1 - epsilon)^(1/H) that composes to epsilon over H steps.
double per_step_alpha(double epsilon, std::size_t horizon);

} // namespace pcbf
