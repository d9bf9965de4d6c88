#pragma once

#include <string>

#include "pcbf/concentration.hpp"
#include "pcbf/cvar.hpp"
#include "pcbf/dynamics.hpp"
#include "pcbf/qp.hpp"

namespace pcbf {

/// How the (theta, s) auxiliaries are handled.
///  Reduced: s and theta eliminated; the resulting convex piecewise-linear
///           constraint in u is enforced through exact supporting planes.
///  Full:    the QP over z = (u, theta, s_1..s_n) is passed to solve_qp as is.
enum class Formulation { Reduced, Full };

struct FilterOptions {
    Formulation formulation = Formulation::Reduced;
    int max_cuts = 400;
    double tolerance = 1e-10; // accepted constraint value at the returned u
};

struct FilterOutcome {
    VectorXd u;
    CvarCertificate certificate; // recomputed from the increments at u
    bool feasible = false;       // certificate.bound <= 1e-8
    bool fallback_used = false;
    QpStatus solve_status = QpStatus::IterationLimit;
    double bound_at_desired = 0.0; // the same bound evaluated at u_des
    double theta = 0.0;            // RU threshold at u (solver value in the full formulation)
    int iterations = 0;
    std::string diagnostics;
};

/// Constant part and max-sample weight of the certified bound
///   tail + max_weight * max_i w_i + ((alpha - band)/alpha) CVaR_{alpha - band}(w).
struct BoundTerms {
    double alpha = 0.0;
    double band = 0.0;
    double tail = 0.0;
    double max_weight = 0.0;
    std::size_t n = 0;

    static BoundTerms subgaussian(const RiskConfig& cfg, double sigma_bar);
    /// The support enters as a constant, so any support_max valid over the
    /// whole box keeps the bound valid at every u.
    static BoundTerms dkw(const RiskConfig& cfg, double support_max);

    double evaluate(const SampleVector& w) const;
};

/// For fixed increments, the optimal value over (theta, s) of
///   max_i [tail + max_weight w_i + ((alpha-band)/alpha)(theta + sum_j s_j / (n (alpha-band)))]
/// subject to s_j >= w_j - theta, s_j >= 0, solved as an LP by solve_qp.
struct LpBoundValue {
    double value = 0.0;
    double theta = 0.0;
    VectorXd s;
    QpStatus status = QpStatus::IterationLimit;
};
LpBoundValue lp_bound_value(const SampleVector& w, const BoundTerms& terms);

/// Filter against an explicit bound; the certificate's delta and sigma_bar are
/// left at zero. Lets tests switch the corrections off entirely.
FilterOutcome filter_with_bound(const AffineIncrementSet& increments, const VectorXd& u_des,
                                const BoundTerms& terms, const ControlBox& box,
                                const FilterOptions& options = {});

/// Probabilistic safety filter with the sub-Gaussian certificate.
FilterOutcome filter_control(const AffineIncrementSet& increments, const VectorXd& u_des,
                             const RiskConfig& cfg, double sigma_bar, const ControlBox& box,
                             const FilterOptions& options = {});

/// Same structure with the truncation baseline's tail term. support_max is
/// raised to the largest increment attainable in the box when smaller.
FilterOutcome dkw_cbf_filter(const AffineIncrementSet& increments, const VectorXd& u_des,
                             const RiskConfig& cfg, double support_max, const ControlBox& box,
                             const FilterOptions& options = {});

/// max over box corners of default_support_max(increments at the corner); an
/// upper bound of mean + k sd and of every increment for all u in the box.
double box_support_max(const AffineIncrementSet& increments, const ControlBox& box,
                       double num_sigmas = 6.0);

/// dh = a0 + a.u + b(x, d): a single half-space in u.
FilterOutcome filter_control_separable(double a0, const VectorXd& a, const SampleVector& b_samples,
                                       const VectorXd& u_des, const RiskConfig& cfg,
                                       double sigma_bar, const ControlBox& box);

struct DeterministicOutcome {
    VectorXd u;
    double constraint_value = 0.0; // h(F(mu, u, mu_d)) - gamma h(mu)
    bool fallback_used = false;
    QpStatus solve_status = QpStatus::IterationLimit;
};

/// Nominal-state CBF: min ||u - u_des||^2 s.t. h(f(mu) + g(mu) u + mu_d) <= gamma h(mu).
/// Requires an affine barrier.
DeterministicOutcome deterministic_cbf_filter(const ControlAffineModel& model,
                                              const BarrierFunction& barrier,
                                              const VectorXd& mean_state,
                                              const VectorXd& mean_disturbance,
                                              const VectorXd& u_des, double gamma,
                                              const ControlBox& box);

} // namespace pcbf
