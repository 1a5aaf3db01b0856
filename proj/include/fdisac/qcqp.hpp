#pragma once

#include <optional>
#include <vector>

#include "fdisac/common.hpp"

namespace fdisac {

/// A convex complex quadratic program:
///   minimize  w^H A w - 2 Re(b^H w) + c
///   s.t.      w^H P_i w - 2 Re(r_i^H w) + s_i <= 0
/// with A and every P_i Hermitian positive semidefinite.
struct QcqpProblem {
    struct Constraint {
        MatC P;
        VecC r;
        double s = 0.0;
    };

    MatC A;
    VecC b;
    double c = 0.0;
    std::vector<Constraint> constraints;
    double tolerance = 1e-8;
    int max_iterations = 500;

    Eigen::Index dim() const { return A.rows(); }
    double objective_at(const VecC& w) const;
    double constraint_at(int i, const VecC& w) const;
};

enum class QcqpStatus { optimal, infeasible, iteration_cap };

struct QcqpSolution {
    VecC w;
    double objective = 0.0;
    double kkt_residual = 0.0;
    VecR duals;  ///< one nonnegative multiplier per constraint
    QcqpStatus status = QcqpStatus::iteration_cap;
};

const char* to_string(QcqpStatus s);

/// Interior-point solve. `status == optimal` certifies the KKT system of the
/// convex program to `tolerance`: stationarity within tol*(1+||b||), primal
/// feasibility and complementary slackness within tol. Deterministic given
/// (problem, warm_start). Throws InvalidInput on non-Hermitian or indefinite
/// data.
QcqpSolution solve(const QcqpProblem& problem,
                   const std::optional<VecC>& warm_start = std::nullopt);

}  // namespace fdisac
