#include "pcbf/filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "pcbf/error.hpp"

namespace pcbf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kFeasibleTol = 1e-8;

struct Cut {
    VectorXd g; // phi(u) >= g.u + c
    double c;
};

void check_inputs(const AffineIncrementSet& inc, const VectorXd& u_des, const ControlBox& box) {
    box.validate();
    if (inc.a.size() == 0) throw Error(ErrorCode::InvalidInput, "no increments");
    if (inc.b.rows() != inc.a.size() || inc.b.cols() != box.dim() || u_des.size() != box.dim())
        throw Error(ErrorCode::DimensionMismatch, "increment, control and box dimensions");
    if (!inc.a.allFinite() || !inc.b.allFinite() || !u_des.allFinite())
        throw Error(ErrorCode::InvalidInput, "non-finite filter input");
}

// Upper-tail weights of the empirical CVaR at level beta: 1/(n beta) on the
// largest floor(n beta) values, the remainder on the next one.
VectorXd cvar_weights(const VectorXd& w, double beta) {
    const auto n = w.size();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return w(i) > w(j); });
    const double nb = static_cast<double>(n) * beta;
    const double per = 1.0 / nb;
    VectorXd q = VectorXd::Zero(n);
    double left = 1.0;
    for (Eigen::Index k = 0; k < n && left > 0.0; ++k) {
        const double take = std::min(per, left);
        q(order[static_cast<std::size_t>(k)]) = take;
        left -= take;
        if (left < 1e-15) left = 0.0;
    }
    return q;
}

class PiecewiseBound {
public:
    PiecewiseBound(const AffineIncrementSet& inc, const BoundTerms& terms)
        : inc_(inc), terms_(terms), beta_(terms.alpha - terms.band),
          kappa_((terms.alpha - terms.band) / terms.alpha) {}

    double value(const VectorXd& u) const { return terms_.evaluate(SampleVector::from_eigen(inc_.evaluate(u))); }

    // Exact supporting plane at u: fixes the argmax sample and the CVaR weights.
    Cut cut(const VectorXd& u) const {
        const VectorXd w = inc_.evaluate(u);
        const VectorXd q = cvar_weights(w, beta_);
        Cut k{kappa_ * (inc_.b.transpose() * q), terms_.tail + kappa_ * q.dot(inc_.a)};
        if (terms_.max_weight != 0.0) {
            Eigen::Index imax = 0;
            w.maxCoeff(&imax);
            k.g += terms_.max_weight * inc_.b.row(imax).transpose();
            k.c += terms_.max_weight * inc_.a(imax);
        }
        return k;
    }

private:
    const AffineIncrementSet& inc_;
    BoundTerms terms_;
    double beta_;
    double kappa_;
};

struct CutResult {
    VectorXd u;
    QpStatus status = QpStatus::IterationLimit;
    int iterations = 0;
    double value = 0.0;
    std::string diagnostics;
};

// Closest point to u_des in the box with phi(u) <= level.
CutResult project_onto_level(const PiecewiseBound& phi, const VectorXd& u_des, const ControlBox& box,
                             double level, std::vector<Cut>& cuts, const FilterOptions& opt) {
    CutResult out;
    const auto nu = u_des.size();
    for (int it = 0; it < opt.max_cuts; ++it) {
        QpProblem qp;
        qp.u_des = u_des;
        qp.A.resize(static_cast<Eigen::Index>(cuts.size()), nu);
        qp.b.resize(static_cast<Eigen::Index>(cuts.size()));
        for (std::size_t k = 0; k < cuts.size(); ++k) {
            qp.A.row(static_cast<Eigen::Index>(k)) = cuts[k].g.transpose();
            qp.b(static_cast<Eigen::Index>(k)) = level - cuts[k].c;
        }
        qp.lower = box.lower;
        qp.upper = box.upper;
        const QpSolution sol = solve_qp(qp, box.clamp(u_des));
        out.iterations += sol.iterations;
        out.status = sol.status;
        if (sol.status != QpStatus::Optimal) {
            out.u = box.clamp(sol.z);
            out.diagnostics = sol.diagnostics;
            return out;
        }
        out.u = box.clamp(sol.z);
        out.value = phi.value(out.u);
        if (out.value <= level + opt.tolerance) return out;
        cuts.push_back(phi.cut(out.u));
    }
    out.status = QpStatus::IterationLimit;
    out.diagnostics = "cutting-plane limit reached";
    return out;
}

// argmin of phi over the box by Kelley's method on (u, t).
CutResult minimize_over_box(const PiecewiseBound& phi, const ControlBox& box, std::vector<Cut>& cuts,
                            const FilterOptions& opt) {
    CutResult out;
    const auto nu = box.dim();
    for (int it = 0; it < opt.max_cuts; ++it) {
        QpProblem lp;
        lp.quadratic_weight = 0.0;
        lp.linear_cost = VectorXd::Zero(nu + 1);
        lp.linear_cost(nu) = 1.0;
        lp.A.resize(static_cast<Eigen::Index>(cuts.size()), nu + 1);
        lp.b.resize(static_cast<Eigen::Index>(cuts.size()));
        for (std::size_t k = 0; k < cuts.size(); ++k) {
            lp.A.row(static_cast<Eigen::Index>(k)) << cuts[k].g.transpose(), -1.0;
            lp.b(static_cast<Eigen::Index>(k)) = -cuts[k].c;
        }
        lp.lower.resize(nu + 1);
        lp.upper.resize(nu + 1);
        lp.lower << box.lower, -kInf;
        lp.upper << box.upper, kInf;
        VectorXd start(nu + 1);
        start << box.clamp(VectorXd::Zero(nu)), 0.0;
        const QpSolution sol = solve_qp(lp, start);
        out.iterations += sol.iterations;
        out.status = sol.status;
        if (sol.status != QpStatus::Optimal) {
            out.u = box.clamp(sol.z.head(nu));
            out.diagnostics = sol.diagnostics;
            return out;
        }
        out.u = box.clamp(sol.z.head(nu));
        out.value = phi.value(out.u);
        if (out.value <= sol.z(nu) + opt.tolerance) return out;
        cuts.push_back(phi.cut(out.u));
    }
    out.status = QpStatus::IterationLimit;
    out.diagnostics = "cutting-plane limit reached while minimizing the bound";
    return out;
}

CvarCertificate certificate_from_terms(const SampleVector& w, const BoundTerms& terms, double delta,
                                       double sigma_bar) {
    CvarCertificate cert;
    cert.alpha = terms.alpha;
    cert.delta = delta;
    cert.n = w.size();
    cert.sigma_bar = sigma_bar;
    cert.sample_digest = w.digest();
    cert.empirical_cvar = empirical_cvar(w, terms.alpha);
    const double shifted = terms.band > 0.0 ? shifted_cvar(w, terms.alpha, terms.band) : cert.empirical_cvar;
    cert.band_term = shifted - cert.empirical_cvar;
    cert.bound = terms.evaluate(w);
    cert.tail_term = cert.bound - shifted;
    return cert;
}

FilterOutcome solve_full(const AffineIncrementSet& inc, const VectorXd& u_des, const BoundTerms& terms,
                         const ControlBox& box) {
    const auto n = inc.size();
    const auto nu = box.dim();
    const auto nz = nu + 1 + n;
    const double kappa = (terms.alpha - terms.band) / terms.alpha;
    const double s_coef = 1.0 / (static_cast<double>(n) * terms.alpha);
    const Eigen::Index n_const1 = terms.max_weight != 0.0 ? n : 1;

    QpProblem qp;
    qp.u_des = u_des;
    qp.A = MatrixXd::Zero(n_const1 + n, nz);
    qp.b.resize(n_const1 + n);
    for (Eigen::Index i = 0; i < n_const1; ++i) {
        qp.A.block(i, 0, 1, nu) = terms.max_weight * inc.b.row(i);
        qp.A(i, nu) = kappa;
        qp.A.block(i, nu + 1, 1, n).setConstant(s_coef);
        qp.b(i) = -terms.tail - terms.max_weight * inc.a(i);
    }
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto r = n_const1 + j;
        qp.A.block(r, 0, 1, nu) = inc.b.row(j);
        qp.A(r, nu) = -1.0;
        qp.A(r, nu + 1 + j) = -1.0;
        qp.b(r) = -inc.a(j);
    }
    qp.lower = VectorXd::Constant(nz, -kInf);
    qp.upper = VectorXd::Constant(nz, kInf);
    qp.lower.head(nu) = box.lower;
    qp.upper.head(nu) = box.upper;
    qp.lower.tail(n).setZero();

    VectorXd start = VectorXd::Zero(nz);
    start.head(nu) = box.clamp(u_des);
    const VectorXd w0 = inc.evaluate(start.head(nu));
    start(nu) = w0.maxCoeff();
    const QpSolution sol = solve_qp(qp, start);

    FilterOutcome out;
    out.solve_status = sol.status;
    out.iterations = sol.iterations;
    out.diagnostics = sol.diagnostics;
    out.u = box.clamp(sol.z.head(nu));
    out.theta = sol.z(nu);
    return out;
}

} // namespace

BoundTerms BoundTerms::subgaussian(const RiskConfig& cfg, double sigma_bar) {
    if (!(sigma_bar >= 0.0) || !std::isfinite(sigma_bar))
        throw Error(ErrorCode::InvalidInput, "sigma_bar must be finite and >= 0");
    BoundTerms t;
    t.alpha = cfg.alpha();
    t.band = cfg.band();
    t.tail = tail_correction(sigma_bar, cfg.n(), cfg.delta(), cfg.alpha());
    t.max_weight = t.band / t.alpha;
    t.n = cfg.n();
    return t;
}

BoundTerms BoundTerms::dkw(const RiskConfig& cfg, double support_max) {
    if (!std::isfinite(support_max)) throw Error(ErrorCode::InvalidInput, "support_max must be finite");
    BoundTerms t;
    t.alpha = cfg.alpha();
    t.band = cfg.band();
    // (support - w_(n)) band/alpha + (band/alpha) w_(n): the sample maximum cancels
    t.tail = support_max * t.band / t.alpha;
    t.max_weight = 0.0;
    t.n = cfg.n();
    return t;
}

double BoundTerms::evaluate(const SampleVector& w) const {
    const double beta = alpha - band;
    const auto sorted = w.sorted();
    const double cvar = detail::empirical_cvar_sorted(sorted, beta).value;
    return tail + max_weight * sorted.back() + (beta / alpha) * cvar;
}

LpBoundValue lp_bound_value(const SampleVector& w, const BoundTerms& terms) {
    const auto n = static_cast<Eigen::Index>(w.size());
    const double kappa = (terms.alpha - terms.band) / terms.alpha;
    QpProblem lp;
    lp.quadratic_weight = 0.0;
    lp.linear_cost = VectorXd::Constant(n + 1, 1.0 / (static_cast<double>(n) * terms.alpha));
    lp.linear_cost(0) = kappa;
    lp.A = MatrixXd::Zero(n, n + 1);
    lp.b.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        lp.A(j, 0) = -1.0;
        lp.A(j, 1 + j) = -1.0;
        lp.b(j) = -w.values()[static_cast<std::size_t>(j)];
    }
    lp.lower = VectorXd::Zero(n + 1);
    lp.lower(0) = -kInf;
    VectorXd start = VectorXd::Zero(n + 1);
    for (Eigen::Index j = 0; j < n; ++j) start(1 + j) = std::max(0.0, w.values()[static_cast<std::size_t>(j)]);
    const QpSolution sol = solve_qp(lp, start);

    LpBoundValue out;
    out.status = sol.status;
    out.theta = sol.z(0);
    out.s = sol.z.tail(n);
    out.value = terms.tail + terms.max_weight * w.max() + sol.objective;
    return out;
}

double box_support_max(const AffineIncrementSet& increments, const ControlBox& box, double num_sigmas) {
    double s = -kInf;
    for (const auto& corner : box.corners())
        s = std::max(s, default_support_max(SampleVector::from_eigen(increments.evaluate(corner)), num_sigmas));
    return s;
}

namespace {

FilterOutcome filter_with_terms(const AffineIncrementSet& inc, const VectorXd& u_des, const BoundTerms& terms,
                                const ControlBox& box, const FilterOptions& opt) {
    check_inputs(inc, u_des, box);
    if (static_cast<std::size_t>(inc.size()) != terms.n)
        throw Error(ErrorCode::DimensionMismatch, "increment count differs from the risk configuration");
    const PiecewiseBound phi(inc, terms);
    FilterOutcome out;
    out.bound_at_desired = phi.value(u_des);

    if (box.contains(u_des) && out.bound_at_desired <= 0.0) {
        out.u = u_des;
        out.solve_status = QpStatus::Optimal;
        out.feasible = true;
        return out;
    }

    if (opt.formulation == Formulation::Full) {
        out = solve_full(inc, u_des, terms, box);
        out.bound_at_desired = phi.value(u_des);
        if (out.solve_status == QpStatus::Optimal) return out;
        if (out.solve_status == QpStatus::IterationLimit)
            throw Error(ErrorCode::InvalidInput, "full filter QP failed: " + out.diagnostics);
    } else {
        std::vector<Cut> cuts{phi.cut(box.clamp(u_des))};
        CutResult r = project_onto_level(phi, u_des, box, 0.0, cuts, opt);
        out.iterations = r.iterations;
        out.solve_status = r.status;
        out.diagnostics = r.diagnostics;
        if (r.status == QpStatus::Optimal) {
            out.u = r.u;
            return out;
        }
        if (r.status == QpStatus::IterationLimit)
            throw Error(ErrorCode::InvalidInput, "filter QP failed: " + r.diagnostics);
    }

    // infeasible: least-bound control, closest to u_des among the minimizers
    std::vector<Cut> cuts{phi.cut(box.clamp(u_des))};
    for (const auto& corner : box.corners()) cuts.push_back(phi.cut(corner));
    CutResult m = minimize_over_box(phi, box, cuts, opt);
    if (m.status != QpStatus::Optimal) throw Error(ErrorCode::InvalidInput, "fallback failed: " + m.diagnostics);
    const double level = m.value + 1e-9 * (1.0 + std::abs(m.value));
    CutResult p = project_onto_level(phi, u_des, box, level, cuts, opt);
    out.u = p.status == QpStatus::Optimal ? p.u : m.u;
    out.fallback_used = true;
    out.solve_status = QpStatus::Infeasible;
    out.iterations += m.iterations + p.iterations;
    return out;
}

void finish(FilterOutcome& out, const AffineIncrementSet& inc, const BoundTerms& terms, double delta,
            double sigma_bar, const FilterOptions& opt) {
    const SampleVector w = SampleVector::from_eigen(inc.evaluate(out.u));
    out.certificate = certificate_from_terms(w, terms, delta, sigma_bar);
    out.feasible = !out.fallback_used && out.certificate.bound <= kFeasibleTol;
    if (opt.formulation == Formulation::Reduced || out.fallback_used || out.iterations == 0)
        out.theta = detail::empirical_cvar_sorted(w.sorted(), terms.alpha - terms.band).theta;
}

} // namespace

FilterOutcome filter_with_bound(const AffineIncrementSet& increments, const VectorXd& u_des,
                                const BoundTerms& terms, const ControlBox& box, const FilterOptions& options) {
    FilterOutcome out = filter_with_terms(increments, u_des, terms, box, options);
    finish(out, increments, terms, 0.0, 0.0, options);
    return out;
}

FilterOutcome filter_control(const AffineIncrementSet& increments, const VectorXd& u_des, const RiskConfig& cfg,
                             double sigma_bar, const ControlBox& box, const FilterOptions& options) {
    const BoundTerms terms = BoundTerms::subgaussian(cfg, sigma_bar);
    FilterOutcome out = filter_with_terms(increments, u_des, terms, box, options);
    finish(out, increments, terms, cfg.delta(), sigma_bar, options);
    // the attached certificate is the library's own bound at u
    const CvarCertificate direct =
        certified_cvar_bound(SampleVector::from_eigen(increments.evaluate(out.u)), cfg, sigma_bar);
    out.certificate = direct;
    out.feasible = !out.fallback_used && direct.bound <= kFeasibleTol;
    return out;
}

FilterOutcome dkw_cbf_filter(const AffineIncrementSet& increments, const VectorXd& u_des, const RiskConfig& cfg,
                             double support_max, const ControlBox& box, const FilterOptions& options) {
    check_inputs(increments, u_des, box);
    double support = support_max;
    for (const auto& corner : box.corners()) support = std::max(support, increments.evaluate(corner).maxCoeff());
    const BoundTerms terms = BoundTerms::dkw(cfg, support);
    FilterOutcome out = filter_with_terms(increments, u_des, terms, box, options);
    finish(out, increments, terms, cfg.delta(), 0.0, options);
    return out;
}

FilterOutcome filter_control_separable(double a0, const VectorXd& a, const SampleVector& b_samples,
                                       const VectorXd& u_des, const RiskConfig& cfg, double sigma_bar,
                                       const ControlBox& box) {
    box.validate();
    if (a.size() != box.dim() || u_des.size() != box.dim())
        throw Error(ErrorCode::DimensionMismatch, "separable filter dimensions");
    const CvarCertificate env = certified_cvar_bound(b_samples, cfg, sigma_bar);
    const double offset = a0 + env.bound;

    FilterOutcome out;
    out.bound_at_desired = offset + a.dot(u_des);
    if (box.contains(u_des) && out.bound_at_desired <= 0.0) {
        out.u = u_des;
        out.solve_status = QpStatus::Optimal;
    } else {
        QpProblem qp;
        qp.u_des = u_des;
        qp.A = a.transpose();
        qp.b = VectorXd::Constant(1, -offset);
        qp.lower = box.lower;
        qp.upper = box.upper;
        const QpSolution sol = solve_qp(qp, box.clamp(u_des));
        out.solve_status = sol.status;
        out.iterations = sol.iterations;
        out.diagnostics = sol.diagnostics;
        if (sol.status == QpStatus::Optimal) {
            out.u = box.clamp(sol.z);
        } else if (sol.status == QpStatus::Infeasible) {
            out.u = VectorXd(box.dim());
            for (Eigen::Index j = 0; j < box.dim(); ++j)
                out.u(j) = a(j) > 0.0 ? box.lower(j) : a(j) < 0.0 ? box.upper(j)
                                                                  : std::clamp(u_des(j), box.lower(j), box.upper(j));
            out.fallback_used = true;
        } else {
            throw Error(ErrorCode::InvalidInput, "separable filter QP failed: " + sol.diagnostics);
        }
    }
    out.certificate = certified_cvar_bound(b_samples.shifted_by(a0 + a.dot(out.u)), cfg, sigma_bar);
    out.feasible = !out.fallback_used && out.certificate.bound <= kFeasibleTol;
    return out;
}

DeterministicOutcome deterministic_cbf_filter(const ControlAffineModel& model, const BarrierFunction& barrier,
                                              const VectorXd& mean_state, const VectorXd& mean_disturbance,
                                              const VectorXd& u_des, double gamma, const ControlBox& box) {
    box.validate();
    if (!barrier.affine_rep) throw Error(ErrorCode::BarrierNotAffine, "deterministic filter needs an affine barrier");
    if (mean_state.size() != model.state_dim || mean_disturbance.size() != model.state_dim ||
        u_des.size() != model.control_dim || box.dim() != model.control_dim)
        throw Error(ErrorCode::DimensionMismatch, "deterministic filter dimensions");
    if (!mean_state.allFinite() || !mean_disturbance.allFinite() || !u_des.allFinite())
        throw Error(ErrorCode::InvalidInput, "non-finite deterministic filter input");
    const VectorXd& c = barrier.affine_rep->c;
    const double a = barrier.value(model.drift(mean_state) + mean_disturbance) - gamma * barrier.value(mean_state);
    const VectorXd b = model.actuation(mean_state).transpose() * c;

    DeterministicOutcome out;
    if (box.contains(u_des) && a + b.dot(u_des) <= 0.0) {
        out.u = u_des;
        out.solve_status = QpStatus::Optimal;
    } else {
        QpProblem qp;
        qp.u_des = u_des;
        qp.A = b.transpose();
        qp.b = VectorXd::Constant(1, -a);
        qp.lower = box.lower;
        qp.upper = box.upper;
        const QpSolution sol = solve_qp(qp, box.clamp(u_des));
        out.solve_status = sol.status;
        if (sol.status == QpStatus::Optimal) {
            out.u = box.clamp(sol.z);
        } else if (sol.status == QpStatus::Infeasible) {
            out.u = VectorXd(box.dim());
            for (Eigen::Index j = 0; j < box.dim(); ++j)
                out.u(j) = b(j) > 0.0 ? box.lower(j) : b(j) < 0.0 ? box.upper(j)
                                                                  : std::clamp(u_des(j), box.lower(j), box.upper(j));
            out.fallback_used = true;
        } else {
            throw Error(ErrorCode::InvalidInput, "deterministic filter QP failed: " + sol.diagnostics);
        }
    }
    out.constraint_value = a + b.dot(out.u);
    return out;
}

} // namespace pcbf
