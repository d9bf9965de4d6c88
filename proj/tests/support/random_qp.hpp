#pragma once

#include <cmath>
#include <random>

#include "pcbf/qp.hpp"
#include "reference_qp.hpp"

namespace pcbf::testing {

// Feasible by construction: rows pass through or beyond an interior point
// z0. A share of rows is made tight at z0 and some are duplicated or
// rescaled copies, which exercises degenerate vertices.
inline QpProblem random_feasible_qp(std::mt19937_64& rng, int max_rows = 1000) {
    std::uniform_int_distribution<int> dim(1, 3);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> nd;
    const int n = dim(rng);
    const int m = static_cast<int>(std::round(std::exp(unit(rng) * std::log(double(max_rows)))));
    QpProblem p;
    p.quadratic_weight = 0.5 + 1.5 * unit(rng);
    p.u_des = Eigen::VectorXd(n);
    Eigen::VectorXd z0(n);
    for (int i = 0; i < n; ++i) {
        p.u_des(i) = 3.0 * nd(rng);
        z0(i) = nd(rng);
    }
    p.A.resize(m, n);
    p.b.resize(m);
    for (int r = 0; r < m; ++r) {
        const double kind = unit(rng);
        if (r > 0 && kind < 0.05) {
            const int src = std::uniform_int_distribution<int>(0, r - 1)(rng);
            const double scale = 0.1 + 5.0 * unit(rng);
            p.A.row(r) = scale * p.A.row(src);
            p.b(r) = scale * p.b(src);
            continue;
        }
        for (int i = 0; i < n; ++i) p.A(r, i) = nd(rng);
        const double slack = kind < 0.15 ? 0.0 : -std::log(unit(rng) + 1e-300);
        p.b(r) = p.A.row(r).dot(z0) + slack;
    }
    if (unit(rng) < 0.5) {
        p.lower = Eigen::VectorXd(n);
        p.upper = Eigen::VectorXd(n);
        for (int i = 0; i < n; ++i) {
            p.lower(i) = unit(rng) < 0.3 ? -INFINITY : z0(i) - 2.0 * unit(rng);
            p.upper(i) = unit(rng) < 0.3 ? INFINITY : z0(i) + 2.0 * unit(rng);
        }
    }
    if (unit(rng) < 0.3) {
        p.linear_cost = Eigen::VectorXd(n);
        for (int i = 0; i < n; ++i) p.linear_cost(i) = nd(rng);
    }
    return p;
}

// Solves the same problem with the interior-point oracle; returns the
// objective in the solver's convention.
inline ReferenceQpResult reference_solve(const QpProblem& p) {
    const Eigen::Index n = p.num_vars();
    const Eigen::Index nu = p.u_des.size();
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
    H.topLeftCorner(nu, nu) = 2.0 * p.quadratic_weight * Eigen::MatrixXd::Identity(nu, nu);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
    c.head(nu) = -2.0 * p.quadratic_weight * p.u_des;
    if (p.linear_cost.size() == n) c += p.linear_cost;
    std::vector<std::pair<Eigen::VectorXd, double>> rows;
    for (Eigen::Index r = 0; r < p.A.rows(); ++r) rows.emplace_back(p.A.row(r).transpose(), p.b(r));
    for (Eigen::Index i = 0; i < n; ++i) {
        if (p.upper.size() == n && std::isfinite(p.upper(i))) {
            Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
            e(i) = 1.0;
            rows.emplace_back(e, p.upper(i));
        }
        if (p.lower.size() == n && std::isfinite(p.lower(i))) {
            Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
            e(i) = -1.0;
            rows.emplace_back(e, -p.lower(i));
        }
    }
    Eigen::MatrixXd G(rows.size(), n);
    Eigen::VectorXd h(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        G.row(r) = rows[r].first.transpose();
        h(r) = rows[r].second;
    }
    auto out = reference_ipm(H, c, G, h);
    out.objective = p.objective(out.z);
    return out;
}

} // namespace pcbf::testing
