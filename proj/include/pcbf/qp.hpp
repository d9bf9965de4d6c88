#pragma once

#include <string>

#include <Eigen/Dense>

namespace pcbf {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr double kQpPrimalTol = 1e-8;
inline constexpr double kQpStationarityTol = 1e-6;
inline constexpr double kQpComplementarityTol = 1e-8;

/// minimize  w ||u - u_des||^2 + c.z   subject to  A z <= b,  lower <= z <= upper,
/// where u is the leading u_des.size() block of z. Bounds may be +-infinity.
struct QpProblem {
    VectorXd u_des;
    double quadratic_weight = 1.0; // 0 turns the problem into an LP
    VectorXd linear_cost;          // over z; empty means zero
    MatrixXd A;                    // rows over z
    VectorXd b;
    VectorXd lower;                // empty means -inf
    VectorXd upper;                // empty means +inf

    Eigen::Index num_vars() const;
    void validate() const;
    double objective(const VectorXd& z) const;
};

enum class QpStatus { Optimal, Infeasible, IterationLimit };

std::string to_string(QpStatus status);

struct KktResiduals {
    double primal = 0.0;
    double stationarity = 0.0;
    double complementarity = 0.0;
};

struct QpSolution {
    VectorXd z;
    QpStatus status = QpStatus::IterationLimit;
    KktResiduals kkt;
    VectorXd multipliers;       // one per row of A, >= 0
    VectorXd lower_multipliers; // one per variable, >= 0
    VectorXd upper_multipliers;
    /// When Infeasible: y = (row, upper, lower) weights, y >= 0, with
    /// A^T y_row + y_upper - y_lower ~ 0 and b.y_row + upper.y_upper - lower.y_lower < 0.
    VectorXd farkas;
    double farkas_residual = 0.0;
    double farkas_gap = 0.0; // the (negative) right-hand side of the combination
    int iterations = 0;
    double objective = 0.0;
    std::string diagnostics;
};

/// Dense primal active-set method with a phase-one LP for the starting point.
/// Ties in the ratio test and in constraint dropping go to the lowest index.
QpSolution solve_qp(const QpProblem& problem);

/// Same, starting from a caller-supplied point (projected onto the bounds).
QpSolution solve_qp(const QpProblem& problem, const VectorXd& start);

/// Residuals of a candidate primal-dual pair, as used by the solver's own check.
KktResiduals kkt_residuals(const QpProblem& problem, const VectorXd& z, const VectorXd& row_mult,
                           const VectorXd& lower_mult, const VectorXd& upper_mult);

} // namespace pcbf
