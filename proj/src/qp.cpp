#include "pcbf/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "pcbf/error.hpp"

namespace pcbf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// All constraints as rows C z <= d: general rows first, then finite upper
// bounds, then finite lower bounds (stored as -z_j <= -l_j).
struct RowModel {
    Eigen::Index nz = 0;
    Eigen::Index nu = 0;
    double w = 0.0;
    VectorXd u_des;
    VectorXd c;
    MatrixXd C;
    VectorXd d;
    Eigen::Index n_general = 0;
    std::vector<Eigen::Index> upper_var; // variable of each upper-bound row
    std::vector<Eigen::Index> lower_var;

    Eigen::Index rows() const { return C.rows(); }

    VectorXd gradient(const VectorXd& z) const {
        VectorXd g = c;
        if (nu > 0) g.head(nu) += 2.0 * w * (z.head(nu) - u_des);
        return g;
    }
};

RowModel build_rows(Eigen::Index nz, Eigen::Index nu, double w, const VectorXd& u_des,
                    const VectorXd& c, const MatrixXd& A, const VectorXd& b,
                    const VectorXd& lower, const VectorXd& upper) {
    RowModel m;
    m.nz = nz;
    m.nu = nu;
    m.w = w;
    m.u_des = u_des;
    m.c = c;
    m.n_general = A.rows();
    for (Eigen::Index j = 0; j < nz; ++j)
        if (std::isfinite(upper(j))) m.upper_var.push_back(j);
    for (Eigen::Index j = 0; j < nz; ++j)
        if (std::isfinite(lower(j))) m.lower_var.push_back(j);
    const auto total = m.n_general + static_cast<Eigen::Index>(m.upper_var.size() + m.lower_var.size());
    m.C = MatrixXd::Zero(total, nz);
    m.d = VectorXd::Zero(total);
    if (m.n_general > 0) {
        m.C.topRows(m.n_general) = A;
        m.d.head(m.n_general) = b;
    }
    Eigen::Index r = m.n_general;
    for (auto j : m.upper_var) {
        m.C(r, j) = 1.0;
        m.d(r++) = upper(j);
    }
    for (auto j : m.lower_var) {
        m.C(r, j) = -1.0;
        m.d(r++) = -lower(j);
    }
    return m;
}

struct ActiveSetResult {
    VectorXd z;
    std::vector<Eigen::Index> working;
    VectorXd lambda; // aligned with working
    QpStatus status = QpStatus::IterationLimit;
    int iterations = 0;
    std::string diagnostics;
};

// QR factorization of the working rows, C_w^T = Q [R; 0], kept current by
// Givens updates as rows enter and leave. Columns k.. of Q span the null
// space of the working rows.
class WorkingQr {
public:
    explicit WorkingQr(Eigen::Index nz) : Q_(MatrixXd::Identity(nz, nz)), R_(MatrixXd::Zero(nz, nz)) {}

    Eigen::Index size() const { return k_; }
    Eigen::Index dim() const { return Q_.rows(); }
    auto null_basis() const { return Q_.rightCols(dim() - k_); }
    auto range_basis() const { return Q_.leftCols(k_); }
    auto triangle() const { return R_.topLeftCorner(k_, k_).triangularView<Eigen::Upper>(); }

    /// Component of c outside the span of the working rows.
    double residual_norm(const VectorXd& c) const {
        return (Q_.rightCols(dim() - k_).transpose() * c).norm();
    }

    void add(const VectorXd& c) {
        VectorXd v = Q_.transpose() * c;
        for (Eigen::Index j = dim() - 1; j > k_; --j) rotate(j - 1, j, v, 0);
        R_.col(k_).setZero();
        R_.col(k_).head(k_ + 1) = v.head(k_ + 1);
        ++k_;
        count_update();
    }

    void remove(Eigen::Index i) {
        for (Eigen::Index c = i; c + 1 < k_; ++c) R_.col(c) = R_.col(c + 1);
        R_.col(k_ - 1).setZero();
        --k_;
        // R is now upper Hessenberg from column i; restore the triangle.
        for (Eigen::Index j = i; j < k_; ++j) {
            VectorXd dummy;
            rotate(j, j + 1, dummy, j);
        }
        count_update();
    }

    bool needs_refresh() const { return updates_ >= 64; }

    void refactor(const MatrixXd& CwT) {
        k_ = CwT.cols();
        updates_ = 0;
        R_.setZero();
        if (k_ == 0) {
            Q_.setIdentity();
            return;
        }
        Eigen::HouseholderQR<MatrixXd> qr(CwT);
        Q_ = qr.householderQ();
        R_.leftCols(k_) = qr.matrixQR().triangularView<Eigen::Upper>();
    }

private:
    // Rotation in the (a, b) plane that zeroes v(b), or R(b, col) when v is
    // empty, applied to R from column col on and to Q.
    void rotate(Eigen::Index a, Eigen::Index b, VectorXd& v, Eigen::Index col) {
        const double x = v.size() ? v(a) : R_(a, col);
        const double y = v.size() ? v(b) : R_(b, col);
        if (y == 0.0) return;
        Eigen::JacobiRotation<double> G;
        G.makeGivens(x, y);
        if (v.size()) v.applyOnTheLeft(a, b, G.adjoint());
        R_.rightCols(dim() - col).applyOnTheLeft(a, b, G.adjoint());
        Q_.applyOnTheRight(a, b, G);
        if (v.size()) v(b) = 0.0;
        else R_(b, col) = 0.0;
    }

    void count_update() { ++updates_; }

    MatrixXd Q_;
    MatrixXd R_;
    Eigen::Index k_ = 0;
    int updates_ = 0;
};

MatrixXd working_rows_transposed(const RowModel& m, const std::vector<Eigen::Index>& working) {
    MatrixXd CwT(m.nz, static_cast<Eigen::Index>(working.size()));
    for (std::size_t i = 0; i < working.size(); ++i)
        CwT.col(static_cast<Eigen::Index>(i)) = m.C.row(working[i]).transpose();
    return CwT;
}

std::vector<Eigen::Index> initial_working_set(const RowModel& m, const VectorXd& z) {
    std::vector<Eigen::Index> working;
    WorkingQr qr(m.nz);
    for (Eigen::Index r = 0; r < m.rows() && qr.size() < m.nz; ++r) {
        const double scale = 1.0 + std::abs(m.d(r)) + m.C.row(r).cwiseAbs().dot(z.cwiseAbs());
        if (std::abs(m.C.row(r).dot(z) - m.d(r)) > 1e-12 * scale) continue;
        const VectorXd cr = m.C.row(r).transpose();
        if (qr.residual_norm(cr) > 1e-9 * std::max(1.0, cr.norm())) {
            qr.add(cr);
            working.push_back(r);
        }
    }
    return working;
}

ActiveSetResult active_set(const RowModel& m, VectorXd z, std::vector<Eigen::Index> working,
                           int max_iterations) {
    ActiveSetResult out;
    std::vector<char> in_working(static_cast<std::size_t>(m.rows()), 0);
    for (auto r : working) in_working[static_cast<std::size_t>(r)] = 1;
    int degenerate_run = 0;
    bool bland = false;
    WorkingQr f(m.nz);
    f.refactor(working_rows_transposed(m, working));

    for (int iter = 0; iter < max_iterations; ++iter) {
        out.iterations = iter + 1;
        if (f.needs_refresh()) f.refactor(working_rows_transposed(m, working));
        const auto k = static_cast<Eigen::Index>(working.size());
        const auto nk = m.nz - k;
        const VectorXd g = m.gradient(z);
        const double gscale = std::max(1.0, g.lpNorm<Eigen::Infinity>());

        VectorXd p = VectorXd::Zero(m.nz);
        bool newton = true;
        if (nk > 0) {
            const auto Z = f.null_basis();
            const VectorXd r = Z.transpose() * g;
            VectorXd r_perp = r;
            MatrixXd V1;
            VectorXd s1;
            if (m.w > 0.0 && m.nu > 0) {
                const MatrixXd Zu = Z.topRows(m.nu);
                Eigen::JacobiSVD<MatrixXd> svd(Zu, Eigen::ComputeThinV);
                const VectorXd& s = svd.singularValues();
                Eigen::Index rank = 0;
                while (rank < s.size() && s(rank) > 1e-10) ++rank;
                V1 = svd.matrixV().leftCols(rank);
                s1 = s.head(rank);
                r_perp -= V1 * (V1.transpose() * r);
            }
            if (r_perp.norm() > 1e-10 * gscale) {
                // zero-curvature descent direction
                newton = false;
                p = -(Z * r_perp);
            } else if (V1.cols() > 0) {
                const VectorXd coeff = (V1.transpose() * r).cwiseQuotient(2.0 * m.w * s1.cwiseAbs2());
                p = -(Z * (V1 * coeff));
            }
        }

        const double zscale = std::max(1.0, z.lpNorm<Eigen::Infinity>());
        if (newton && p.lpNorm<Eigen::Infinity>() <= 1e-13 * zscale) {
            // stationary on the working set: check multipliers
            VectorXd lambda(k);
            if (k > 0) {
                const VectorXd rhs = -(f.range_basis().transpose() * g);
                lambda = f.triangle().solve(rhs);
            }
            Eigen::Index drop = -1;
            const double tol = 1e-10 * gscale;
            for (Eigen::Index i = 0; i < k; ++i) {
                if (lambda(i) >= -tol) continue;
                if (drop < 0) {
                    drop = i;
                } else if (bland) {
                    if (working[static_cast<std::size_t>(i)] < working[static_cast<std::size_t>(drop)]) drop = i;
                } else if (lambda(i) < lambda(drop) ||
                           (lambda(i) == lambda(drop) &&
                            working[static_cast<std::size_t>(i)] < working[static_cast<std::size_t>(drop)])) {
                    drop = i;
                }
            }
            if (drop < 0) {
                out.z = std::move(z);
                out.working = std::move(working);
                out.lambda = lambda.cwiseMax(0.0);
                out.status = QpStatus::Optimal;
                return out;
            }
            in_working[static_cast<std::size_t>(working[static_cast<std::size_t>(drop)])] = 0;
            working.erase(working.begin() + drop);
            f.remove(drop);
            continue;
        }

        // ratio test, lowest index wins ties
        const double pnorm = p.norm();
        double step = newton ? 1.0 : kInf;
        Eigen::Index blocking = -1;
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            if (in_working[static_cast<std::size_t>(r)]) continue;
            const double cp = m.C.row(r).dot(p);
            if (cp <= 1e-12 * m.C.row(r).norm() * pnorm) continue;
            const double slack = std::max(0.0, m.d(r) - m.C.row(r).dot(z));
            const double t = slack / cp;
            if (t < step) {
                step = t;
                blocking = r;
            }
        }
        if (blocking < 0 && !newton) {
            out.z = std::move(z);
            out.working = std::move(working);
            out.diagnostics = "objective unbounded below along a zero-curvature direction";
            return out;
        }
        z += step * p;
        if (blocking >= 0) {
            working.push_back(blocking);
            in_working[static_cast<std::size_t>(blocking)] = 1;
            f.add(m.C.row(blocking).transpose());
        }
        if (step == 0.0) {
            if (++degenerate_run > 2 * m.nz) bland = true;
        } else {
            degenerate_run = 0;
        }
    }
    out.z = std::move(z);
    out.working = std::move(working);
    std::ostringstream msg;
    msg << "iteration limit " << max_iterations << " reached";
    out.diagnostics = msg.str();
    return out;
}

int iteration_limit(Eigen::Index rows) {
    return static_cast<int>(std::max<Eigen::Index>(10 * rows, 50));
}

VectorXd or_fill(const VectorXd& v, Eigen::Index n, double fill) {
    return v.size() == 0 ? VectorXd::Constant(n, fill) : v;
}

} // namespace

Eigen::Index QpProblem::num_vars() const {
    if (A.cols() > 0) return A.cols();
    if (linear_cost.size() > 0) return linear_cost.size();
    if (lower.size() > 0) return lower.size();
    if (upper.size() > 0) return upper.size();
    return u_des.size();
}

void QpProblem::validate() const {
    const auto nz = num_vars();
    if (u_des.size() > nz) throw Error(ErrorCode::DimensionMismatch, "u_des longer than z");
    if (A.rows() != b.size()) throw Error(ErrorCode::DimensionMismatch, "A rows vs b");
    if (A.rows() > 0 && A.cols() != nz) throw Error(ErrorCode::DimensionMismatch, "A columns");
    for (const VectorXd* v : {&linear_cost, &lower, &upper})
        if (v->size() != 0 && v->size() != nz) throw Error(ErrorCode::DimensionMismatch, "vector length vs z");
    if (!(quadratic_weight >= 0.0) || !std::isfinite(quadratic_weight))
        throw Error(ErrorCode::InvalidInput, "quadratic weight must be finite and >= 0");
    if (!u_des.allFinite() || !A.allFinite() || !b.allFinite() || !linear_cost.allFinite())
        throw Error(ErrorCode::InvalidInput, "QP data must be finite");
    const VectorXd lo = or_fill(lower, nz, -kInf), hi = or_fill(upper, nz, kInf);
    for (Eigen::Index j = 0; j < nz; ++j)
        if (std::isnan(lo(j)) || std::isnan(hi(j)) || lo(j) > hi(j) || lo(j) == kInf || hi(j) == -kInf)
            throw Error(ErrorCode::InvalidInput, "inconsistent variable bounds");
}

double QpProblem::objective(const VectorXd& z) const {
    double f = 0.0;
    if (u_des.size() > 0) f += quadratic_weight * (z.head(u_des.size()) - u_des).squaredNorm();
    if (linear_cost.size() > 0) f += linear_cost.dot(z);
    return f;
}

std::string to_string(QpStatus status) {
    switch (status) {
    case QpStatus::Optimal: return "Optimal";
    case QpStatus::Infeasible: return "Infeasible";
    case QpStatus::IterationLimit: return "IterationLimit";
    }
    return "Unknown";
}

KktResiduals kkt_residuals(const QpProblem& problem, const VectorXd& z, const VectorXd& row_mult,
                           const VectorXd& lower_mult, const VectorXd& upper_mult) {
    const auto nz = problem.num_vars();
    const auto nu = problem.u_des.size();
    const VectorXd lo = or_fill(problem.lower, nz, -kInf), hi = or_fill(problem.upper, nz, kInf);
    KktResiduals k;
    VectorXd g = or_fill(problem.linear_cost, nz, 0.0);
    if (nu > 0) g.head(nu) += 2.0 * problem.quadratic_weight * (z.head(nu) - problem.u_des);
    if (problem.A.rows() > 0) {
        const VectorXd slack = problem.A * z - problem.b;
        k.primal = std::max(0.0, slack.maxCoeff());
        g += problem.A.transpose() * row_mult;
        k.complementarity = row_mult.cwiseProduct(slack.cwiseAbs()).maxCoeff();
    }
    g += upper_mult - lower_mult;
    for (Eigen::Index j = 0; j < nz; ++j) {
        k.primal = std::max({k.primal, lo(j) - z(j), z(j) - hi(j)});
        if (upper_mult(j) > 0.0) k.complementarity = std::max(k.complementarity, upper_mult(j) * std::abs(hi(j) - z(j)));
        if (lower_mult(j) > 0.0) k.complementarity = std::max(k.complementarity, lower_mult(j) * std::abs(z(j) - lo(j)));
    }
    k.stationarity = g.lpNorm<Eigen::Infinity>();
    return k;
}

QpSolution solve_qp(const QpProblem& problem) {
    const auto nz = problem.num_vars();
    VectorXd start = VectorXd::Zero(nz);
    if (problem.u_des.size() > 0) start.head(problem.u_des.size()) = problem.u_des;
    return solve_qp(problem, start);
}

QpSolution solve_qp(const QpProblem& problem, const VectorXd& start) {
    problem.validate();
    const auto nz = problem.num_vars();
    const auto nu = problem.u_des.size();
    if (start.size() != nz) throw Error(ErrorCode::DimensionMismatch, "start point length");
    const VectorXd lo = or_fill(problem.lower, nz, -kInf), hi = or_fill(problem.upper, nz, kInf);
    const VectorXd c = or_fill(problem.linear_cost, nz, 0.0);
    const auto m_general = problem.A.rows();

    QpSolution sol;
    VectorXd z = start.cwiseMax(lo).cwiseMin(hi);
    int total_iterations = 0;

    const RowModel model = build_rows(nz, nu, problem.quadratic_weight, problem.u_des, c, problem.A,
                                      problem.b, lo, hi);
    const int limit = iteration_limit(model.rows());

    double violation = m_general > 0 ? (problem.A * z - problem.b).maxCoeff() : 0.0;
    if (violation > 0.0) {
        // phase one: minimize t subject to A z - t <= b, bounds on z, t >= 0
        MatrixXd A1(m_general, nz + 1);
        A1 << problem.A, -VectorXd::Ones(m_general);
        VectorXd lo1(nz + 1), hi1(nz + 1), c1 = VectorXd::Zero(nz + 1);
        lo1 << lo, 0.0;
        hi1 << hi, kInf;
        c1(nz) = 1.0;
        const RowModel phase1 = build_rows(nz + 1, 0, 0.0, VectorXd(), c1, A1, problem.b, lo1, hi1);
        VectorXd z1(nz + 1);
        z1 << z, violation;
        ActiveSetResult r1 = active_set(phase1, z1, initial_working_set(phase1, z1), iteration_limit(phase1.rows()));
        total_iterations += r1.iterations;
        if (r1.status != QpStatus::Optimal) {
            sol.z = r1.z.head(nz);
            sol.iterations = total_iterations;
            sol.diagnostics = "phase one: " + r1.diagnostics;
            return sol;
        }
        const double t_star = r1.z(nz);
        const double feas_tol = 1e-9 * (1.0 + problem.b.lpNorm<Eigen::Infinity>());
        if (t_star > feas_tol) {
            // Farkas weights over (rows, upper bounds, lower bounds)
            VectorXd y = VectorXd::Zero(m_general + 2 * nz);
            for (std::size_t i = 0; i < r1.working.size(); ++i) {
                const auto row = r1.working[i];
                const double lam = r1.lambda(static_cast<Eigen::Index>(i));
                if (row < m_general) {
                    y(row) = lam;
                } else if (row < m_general + static_cast<Eigen::Index>(phase1.upper_var.size())) {
                    const auto j = phase1.upper_var[static_cast<std::size_t>(row - m_general)];
                    if (j < nz) y(m_general + j) = lam;
                } else {
                    const auto j = phase1.lower_var[static_cast<std::size_t>(
                        row - m_general - static_cast<Eigen::Index>(phase1.upper_var.size()))];
                    if (j < nz) y(m_general + nz + j) = lam;
                }
            }
            const VectorXd yr = y.head(m_general), yu = y.segment(m_general, nz), yl = y.tail(nz);
            sol.farkas = y;
            sol.farkas_residual = (problem.A.transpose() * yr + yu - yl).lpNorm<Eigen::Infinity>();
            double gap = problem.b.dot(yr);
            for (Eigen::Index j = 0; j < nz; ++j) {
                if (yu(j) > 0.0) gap += yu(j) * hi(j);
                if (yl(j) > 0.0) gap -= yl(j) * lo(j);
            }
            sol.farkas_gap = gap;
            sol.z = r1.z.head(nz);
            sol.status = QpStatus::Infeasible;
            sol.iterations = total_iterations;
            std::ostringstream msg;
            msg << "minimum constraint violation " << t_star;
            sol.diagnostics = msg.str();
            return sol;
        }
        z = r1.z.head(nz);
    }

    ActiveSetResult r = active_set(model, z, initial_working_set(model, z), limit);
    total_iterations += r.iterations;
    sol.z = r.z;
    sol.iterations = total_iterations;
    sol.diagnostics = r.diagnostics;
    sol.multipliers = VectorXd::Zero(m_general);
    sol.lower_multipliers = VectorXd::Zero(nz);
    sol.upper_multipliers = VectorXd::Zero(nz);
    for (std::size_t i = 0; i < r.working.size() && r.status == QpStatus::Optimal; ++i) {
        const auto row = r.working[i];
        const double lam = r.lambda(static_cast<Eigen::Index>(i));
        if (row < m_general) {
            sol.multipliers(row) = lam;
        } else if (row < m_general + static_cast<Eigen::Index>(model.upper_var.size())) {
            sol.upper_multipliers(model.upper_var[static_cast<std::size_t>(row - m_general)]) = lam;
        } else {
            sol.lower_multipliers(model.lower_var[static_cast<std::size_t>(
                row - m_general - static_cast<Eigen::Index>(model.upper_var.size()))]) = lam;
        }
    }
    sol.objective = problem.objective(sol.z);
    sol.kkt = kkt_residuals(problem, sol.z, sol.multipliers, sol.lower_multipliers, sol.upper_multipliers);
    if (r.status != QpStatus::Optimal) return sol;

    const double gscale = std::max(1.0, c.lpNorm<Eigen::Infinity>() +
                                            2.0 * problem.quadratic_weight *
                                                (nu > 0 ? (sol.z.head(nu) - problem.u_des).lpNorm<Eigen::Infinity>() : 0.0));
    if (sol.kkt.primal <= kQpPrimalTol && sol.kkt.stationarity <= kQpStationarityTol * gscale &&
        sol.kkt.complementarity <= kQpComplementarityTol) {
        sol.status = QpStatus::Optimal;
    } else {
        std::ostringstream msg;
        msg << "KKT check failed: primal " << sol.kkt.primal << " stationarity " << sol.kkt.stationarity
            << " complementarity " << sol.kkt.complementarity;
        sol.diagnostics = msg.str();
    }
    return sol;
}

} // namespace pcbf
