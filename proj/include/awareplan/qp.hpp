#pragma once

#include <Eigen/Core>

namespace awareplan::qp {

enum class Status { Optimal, Infeasible, NotPositiveDefinite };

struct Result {
    Status status = Status::Infeasible;
    Eigen::VectorXd x;
    double objective = 0.0;  // 0.5 x'Gx + g'x
    int active_constraints = 0;
};

/// Dense strictly convex QP
///     minimize 0.5 x'Gx + g'x   subject to   A x >= b
/// solved with the Goldfarb-Idnani dual active-set method. G must be
/// symmetric positive definite. Intended for a few dozen variables.
Result solve(const Eigen::MatrixXd& G, const Eigen::VectorXd& g, const Eigen::MatrixXd& A,
             const Eigen::VectorXd& b);

}  // namespace awareplan::qp
