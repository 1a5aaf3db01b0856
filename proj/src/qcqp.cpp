#include "fdisac/qcqp.hpp"

#include <algorithm>
#include <limits>

namespace fdisac {

double QcqpProblem::objective_at(const VecC& w) const {
    return (w.adjoint() * A * w).real().value() - 2.0 * b.dot(w).real() + c;
}

double QcqpProblem::constraint_at(int i, const VecC& w) const {
    const auto& g = constraints[static_cast<std::size_t>(i)];
    return (w.adjoint() * g.P * w).real().value() - 2.0 * g.r.dot(w).real() + g.s;
}

const char* to_string(QcqpStatus s) {
    switch (s) {
        case QcqpStatus::optimal: return "optimal";
        case QcqpStatus::infeasible: return "infeasible";
        case QcqpStatus::iteration_cap: return "iteration_cap";
    }
    return "?";
}

namespace {

double max_abs(const MatC& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }
double max_abs(const VecC& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

void require_hermitian_psd(const MatC& m, const char* what) {
    const double scale = std::max(1.0, max_abs(m));
    if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw InvalidInput(std::string("qcqp: ") + what + " is not Hermitian");
    // PSD within -1e-8*trace: the shifted matrix must admit a Cholesky
    // factorization (much cheaper than an eigendecomposition here).
    MatC shifted = 0.5 * (m + m.adjoint());
    const double trace = std::max(shifted.trace().real(), 0.0);
    const double shift = 1.1e-8 * std::max(trace, max_abs(m) * 1e-12) + 1e-300;
    shifted.diagonal().array() += shift;
    if (Eigen::LLT<MatC>(shifted).info() != Eigen::Success)
        throw InvalidInput(std::string("qcqp: ") + what + " is not positive semidefinite");
}

MatR real_embed(const MatC& m) {
    const Eigen::Index n = m.rows();
    MatR out(2 * n, 2 * n);
    out.topLeftCorner(n, n) = m.real();
    out.topRightCorner(n, n) = -m.imag();
    out.bottomLeftCorner(n, n) = m.imag();
    out.bottomRightCorner(n, n) = m.real();
    return 0.5 * (out + out.transpose());
}

VecR real_embed(const VecC& v) {
    VecR out(2 * v.size());
    out.head(v.size()) = v.real();
    out.tail(v.size()) = v.imag();
    return out;
}

VecC complex_from(const VecR& x) {
    const Eigen::Index n = x.size() / 2;
    VecC w(n);
    w.real() = x.head(n);
    w.imag() = x.tail(n);
    return w;
}

/// Real-valued scaled problem: minimize x^T Q0 x - 2 q0^T x subject to
/// x^T Qi x - 2 qi^T x + si <= 0.
struct RealQcqp {
    MatR Q0;
    VecR q0;
    std::vector<MatR> Q;
    std::vector<VecR> q;
    std::vector<double> s;

    int m() const { return static_cast<int>(Q.size()); }

    double constraint(int i, const VecR& x) const {
        return x.dot(Q[static_cast<std::size_t>(i)] * x) -
               2.0 * q[static_cast<std::size_t>(i)].dot(x) + s[static_cast<std::size_t>(i)];
    }

    VecR constraint_grad(int i, const VecR& x) const {
        return 2.0 * (Q[static_cast<std::size_t>(i)] * x - q[static_cast<std::size_t>(i)]);
    }
};

struct IpmOptions {
    int max_iters = 500;       ///< total Newton-step budget
    double eps_gap = 1e-12;    ///< final duality gap m/t
    double eps_dual = 1e-12;   ///< centering target on ||grad||/t
    // Early exit once the objective drops below this value (Phase I).
    double objective_early_exit = -std::numeric_limits<double>::infinity();
};

struct IpmResult {
    VecR x;
    VecR lambda;
    bool converged = false;
};

/// Log-barrier path following from a strictly feasible x0: damped Newton on
/// t f(x) + sum -log(-g_i(x)) per centering step, then t grows by mu.
IpmResult ipm(const RealQcqp& p, const VecR& x0, const IpmOptions& opt) {
    const int m = p.m();
    const Eigen::Index n = x0.size();
    VecR x = x0;
    const double mu = 20.0;
    double t = 1.0;

    auto barrier = [&](const VecR& xx, bool& interior) {
        double val = t * (xx.dot(p.Q0 * xx) - 2.0 * p.q0.dot(xx));
        interior = true;
        for (int i = 0; i < m; ++i) {
            const double g = p.constraint(i, xx);
            if (g >= 0.0) {
                interior = false;
                return val;
            }
            val -= std::log(-g);
        }
        return val;
    };

    IpmResult out;
    int newton_budget = opt.max_iters;
    bool centered = false;
    while (newton_budget > 0) {
        // center at the current t
        centered = false;
        for (int it = 0; it < 80 && newton_budget > 0; ++it, --newton_budget) {
            VecR grad = t * 2.0 * (p.Q0 * x - p.q0);
            MatR hess = t * 2.0 * p.Q0;
            for (int i = 0; i < m; ++i) {
                const double g = p.constraint(i, x);
                const VecR gg = p.constraint_grad(i, x);
                grad += gg / (-g);
                hess += 2.0 * p.Q[static_cast<std::size_t>(i)] / (-g) +
                        (gg * gg.transpose()) / (g * g);
            }
            if (grad.norm() <= opt.eps_dual * t * (1.0 + p.q0.norm())) {
                centered = true;
                break;
            }
            hess.diagonal().array() += 1e-12 * std::max(1.0, hess.diagonal().maxCoeff());
            const VecR dx = Eigen::LDLT<MatR>(hess).solve(-grad);
            if (!dx.allFinite()) break;
            const double slope = grad.dot(dx);
            if (slope >= 0.0) break;
            if (-slope <= 2.0 * opt.eps_dual * t * (1.0 + p.q0.norm())) {
                centered = true;  // Newton decrement at numerical floor
                break;
            }
            bool interior = false;
            const double b0 = barrier(x, interior);
            double step = 1.0;
            bool accepted = false;
            for (int ls = 0; ls < 60; ++ls) {
                const VecR xn = x + step * dx;
                bool ok = false;
                const double b1 = barrier(xn, ok);
                if (ok && b1 <= b0 + 0.25 * step * slope) {
                    x = xn;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if (!accepted) break;
            if (x.dot(p.Q0 * x) - 2.0 * p.q0.dot(x) < opt.objective_early_exit) {
                out.x = x;
                out.lambda = VecR::Zero(m);
                return out;
            }
        }
        if (!centered) break;
        if (m == 0 || double(m) / t <= opt.eps_gap) {
            out.converged = true;
            break;
        }
        t *= mu;
    }

    out.x = x;
    out.lambda.resize(m);
    for (int i = 0; i < m; ++i)
        out.lambda[i] = 1.0 / (t * std::max(-p.constraint(i, x), 1e-300));
    (void)n;
    return out;
}

/// Minimize max_i g_i(x) - s over (x, s), early-exiting once strictly
/// feasible. Returns the best x and the achieved margin max_i g_i(x).
struct PhaseIResult {
    VecR x;
    double violation = 0.0;
};

PhaseIResult phase_one(const RealQcqp& p, const VecR& x0, int max_iters) {
    const Eigen::Index n = x0.size();
    const int m = p.m();
    RealQcqp ext;
    ext.Q0 = MatR::Zero(n + 1, n + 1);
    ext.q0 = VecR::Zero(n + 1);
    ext.q0[n] = -0.5;  // objective = +s
    ext.Q.resize(static_cast<std::size_t>(m));
    ext.q.resize(static_cast<std::size_t>(m));
    ext.s = p.s;
    for (int i = 0; i < m; ++i) {
        ext.Q[static_cast<std::size_t>(i)] = MatR::Zero(n + 1, n + 1);
        ext.Q[static_cast<std::size_t>(i)].topLeftCorner(n, n) = p.Q[static_cast<std::size_t>(i)];
        ext.q[static_cast<std::size_t>(i)] = VecR::Zero(n + 1);
        ext.q[static_cast<std::size_t>(i)].head(n) = p.q[static_cast<std::size_t>(i)];
        ext.q[static_cast<std::size_t>(i)][n] = 0.5;  // ... g_i(x) - s <= 0
    }
    VecR z0(n + 1);
    z0.head(n) = x0;
    double worst = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) worst = std::max(worst, p.constraint(i, x0));
    z0[n] = worst + 1.0;

    IpmOptions opt;
    opt.max_iters = max_iters;
    opt.eps_gap = 1e-11;
    opt.eps_dual = 1e-9;
    opt.objective_early_exit = -1e-2;
    const IpmResult r = ipm(ext, z0, opt);

    PhaseIResult out;
    out.x = r.x.head(n);
    out.violation = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) out.violation = std::max(out.violation, p.constraint(i, out.x));
    return out;
}

}  // namespace

QcqpSolution solve(const QcqpProblem& problem, const std::optional<VecC>& warm_start) {
    const Eigen::Index n = problem.dim();
    if (problem.A.rows() != n || problem.A.cols() != n || problem.b.size() != n)
        throw InvalidInput("qcqp: objective dimension mismatch");
    require_hermitian_psd(problem.A, "objective matrix");
    for (const auto& con : problem.constraints) {
        if (con.P.rows() != n || con.P.cols() != n || con.r.size() != n)
            throw InvalidInput("qcqp: constraint dimension mismatch");
        require_hermitian_psd(con.P, "constraint matrix");
    }
    if (warm_start && warm_start->size() != n)
        throw InvalidInput("qcqp: warm start dimension mismatch");

    const int m_all = static_cast<int>(problem.constraints.size());
    const double tol = problem.tolerance;

    // Constant constraints (P = 0, r = 0) are checked once and dropped.
    std::vector<int> live;
    for (int i = 0; i < m_all; ++i) {
        const auto& con = problem.constraints[static_cast<std::size_t>(i)];
        if (max_abs(con.P) == 0.0 && max_abs(con.r) == 0.0) {
            if (con.s > tol) {
                QcqpSolution sol;
                sol.w = warm_start ? *warm_start : VecC::Zero(n);
                sol.objective = problem.objective_at(sol.w);
                sol.duals = VecR::Zero(m_all);
                sol.kkt_residual = con.s;
                sol.status = QcqpStatus::infeasible;
                return sol;
            }
        } else {
            live.push_back(i);
        }
    }
    const int m = static_cast<int>(live.size());

    // Scale objective and each constraint to O(1).
    const double obj_scale = std::max({max_abs(problem.A), max_abs(problem.b), 1e-300});
    RealQcqp rp;
    rp.Q0 = real_embed(problem.A) / obj_scale;
    rp.q0 = real_embed(problem.b) / obj_scale;
    std::vector<double> con_scale(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        const auto& con = problem.constraints[static_cast<std::size_t>(live[static_cast<std::size_t>(i)])];
        const double sc = std::max({max_abs(con.P), max_abs(con.r), std::abs(con.s), 1e-300});
        con_scale[static_cast<std::size_t>(i)] = sc;
        rp.Q.push_back(real_embed(con.P) / sc);
        rp.q.push_back(real_embed(con.r) / sc);
        rp.s.push_back(con.s / sc);
    }

    auto kkt_of = [&](const VecC& w, const VecR& duals) {
        VecC stat = problem.A * w - problem.b;
        double worst_violation = 0.0;
        double worst_slack = 0.0;
        for (int i = 0; i < m_all; ++i) {
            const auto& con = problem.constraints[static_cast<std::size_t>(i)];
            const double gi = problem.constraint_at(i, w);
            stat += duals[i] * (con.P * w - con.r);
            worst_violation = std::max(worst_violation, gi);
            worst_slack = std::max(worst_slack, std::abs(duals[i] * gi));
        }
        return std::max({stat.norm() / (1.0 + problem.b.norm()), worst_violation, worst_slack});
    };

    // The barrier multipliers 1/(t(-g_i)) are hypersensitive to the last
    // centering's floor; a stationarity least-squares fit over the
    // near-active constraints recovers them to full precision.
    auto polish_duals = [&](const VecC& w, const VecR& duals) {
        std::vector<int> active;
        for (int i = 0; i < m; ++i) {
            const int idx = live[static_cast<std::size_t>(i)];
            if (problem.constraint_at(idx, w) / con_scale[static_cast<std::size_t>(i)] >= -1e-6)
                active.push_back(idx);
        }
        VecR out = duals;
        if (active.empty()) return out;
        MatC cols(n, static_cast<Eigen::Index>(active.size()));
        for (std::size_t j = 0; j < active.size(); ++j) {
            const auto& con = problem.constraints[static_cast<std::size_t>(active[j])];
            cols.col(static_cast<Eigen::Index>(j)) = con.P * w - con.r;
        }
        const VecC v = problem.A * w - problem.b;
        std::vector<int> keep(active.size());
        for (std::size_t j = 0; j < keep.size(); ++j) keep[j] = 1;
        for (std::size_t round = 0; round <= active.size(); ++round) {
            std::vector<Eigen::Index> free;
            for (std::size_t j = 0; j < keep.size(); ++j)
                if (keep[j]) free.push_back(static_cast<Eigen::Index>(j));
            if (free.empty()) break;
            MatC sub(n, static_cast<Eigen::Index>(free.size()));
            for (std::size_t j = 0; j < free.size(); ++j) sub.col(j) = cols.col(free[j]);
            const MatR gram = (sub.adjoint() * sub).real();
            const VecR rhs = -(sub.adjoint() * v).real();
            const VecR lam =
                (gram + 1e-14 * gram.trace() * MatR::Identity(gram.rows(), gram.cols()))
                    .ldlt()
                    .solve(rhs);
            int worst = -1;
            double worst_val = 0.0;
            for (Eigen::Index j = 0; j < lam.size(); ++j)
                if (lam[j] < worst_val) {
                    worst_val = lam[j];
                    worst = static_cast<int>(j);
                }
            if (worst < 0) {
                for (std::size_t j = 0; j < free.size(); ++j)
                    out[active[static_cast<std::size_t>(free[j])]] = lam[j];
                break;
            }
            keep[static_cast<std::size_t>(free[worst])] = 0;
            out[active[static_cast<std::size_t>(free[worst])]] = 0.0;
        }
        return out;
    };

    auto finish = [&](const VecR& x, const VecR& lam_scaled) {
        QcqpSolution sol;
        sol.w = complex_from(x);
        sol.objective = problem.objective_at(sol.w);
        sol.duals = VecR::Zero(m_all);
        for (int i = 0; i < m; ++i)
            sol.duals[live[static_cast<std::size_t>(i)]] =
                std::max(0.0, lam_scaled[i]) * obj_scale / con_scale[static_cast<std::size_t>(i)];

        const VecR polished = polish_duals(sol.w, sol.duals);
        const double kkt_raw = kkt_of(sol.w, sol.duals);
        const double kkt_pol = kkt_of(sol.w, polished);
        if (kkt_pol < kkt_raw) sol.duals = polished;
        sol.kkt_residual = std::min(kkt_raw, kkt_pol);
        sol.status = (sol.kkt_residual <= tol) ? QcqpStatus::optimal : QcqpStatus::iteration_cap;
        return sol;
    };

    // Unconstrained: direct normal-equation solve (min-norm on singular A).
    if (m == 0) {
        Eigen::CompleteOrthogonalDecomposition<MatR> cod(rp.Q0);
        const VecR x = cod.solve(rp.q0);
        if ((rp.Q0 * x - rp.q0).norm() > 1e-8 * (1.0 + rp.q0.norm()))
            throw InvalidInput("qcqp: unconstrained objective is unbounded below");
        return finish(x, VecR());
    }

    // Fast path: if the unconstrained minimizer already satisfies every
    // constraint it is KKT-optimal with zero multipliers.
    {
        const Eigen::LLT<MatR> llt(rp.Q0);
        if (llt.info() == Eigen::Success) {
            const VecR x = llt.solve(rp.q0);
            if ((rp.Q0 * x - rp.q0).norm() <= 1e-10 * (1.0 + rp.q0.norm())) {
                bool inside = true;
                for (int i = 0; i < m && inside; ++i)
                    if (rp.constraint(i, x) > 0.0) inside = false;
                if (inside) return finish(x, VecR::Zero(m));
            }
        }
    }

    // Newton refinement on the active-set KKT system (no barrier parameter,
    // so it reaches machine precision where the barrier path bottoms out).
    auto active_set_refine = [&](VecR x, VecR lam) {
        std::vector<int> act;
        for (int i = 0; i < m; ++i)
            if (rp.constraint(i, x) >= -1e-6) act.push_back(i);
        const Eigen::Index nn = x.size();
        const Eigen::Index a = static_cast<Eigen::Index>(act.size());
        if (a > 0) {
            for (int pass = 0; pass < 3; ++pass) {
                MatR kkt = MatR::Zero(nn + a, nn + a);
                VecR rhs(nn + a);
                MatR H = 2.0 * rp.Q0;
                VecR r1 = 2.0 * (rp.Q0 * x - rp.q0);
                for (Eigen::Index j = 0; j < a; ++j) {
                    const int i = act[static_cast<std::size_t>(j)];
                    const double lj = std::max(0.0, lam[i]);
                    H += lj * 2.0 * rp.Q[static_cast<std::size_t>(i)];
                    const VecR gg = rp.constraint_grad(i, x);
                    r1 += lj * gg;
                    kkt.block(0, nn + j, nn, 1) = gg;
                    kkt.block(nn + j, 0, 1, nn) = gg.transpose();
                    rhs[nn + j] = -rp.constraint(i, x);
                }
                kkt.topLeftCorner(nn, nn) = H;
                kkt.diagonal().head(nn).array() += 1e-14 * std::max(1.0, H.diagonal().maxCoeff());
                rhs.head(nn) = -r1;
                const VecR dz = Eigen::PartialPivLU<MatR>(kkt).solve(rhs);
                if (!dz.allFinite()) break;
                x += dz.head(nn);
                for (Eigen::Index j = 0; j < a; ++j)
                    lam[act[static_cast<std::size_t>(j)]] =
                        std::max(0.0, lam[act[static_cast<std::size_t>(j)]] + dz[nn + j]);
            }
        }
        return std::make_pair(x, lam);
    };

    // Strictly feasible start: warm start or origin, otherwise Phase I.
    VecR x0;
    bool have_interior = false;
    std::vector<VecR> candidates;
    if (warm_start) candidates.push_back(real_embed(*warm_start));
    candidates.push_back(VecR::Zero(2 * n));
    for (const auto& cand : candidates) {
        double worst = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < m; ++i) worst = std::max(worst, rp.constraint(i, cand));
        if (worst < -1e-12) {
            x0 = cand;
            have_interior = true;
            break;
        }
    }
    if (!have_interior) {
        const PhaseIResult ph = phase_one(rp, candidates.front(), problem.max_iterations);
        if (ph.violation >= -1e-12) {
            // No strict interior found. A positive certified floor on some
            // constraint, or a positive Phase-I optimum, means infeasible.
            QcqpSolution sol;
            sol.w = complex_from(ph.x);
            sol.objective = problem.objective_at(sol.w);
            sol.duals = VecR::Zero(m_all);
            sol.kkt_residual = std::numeric_limits<double>::infinity();
            sol.status = (ph.violation > tol) ? QcqpStatus::infeasible : QcqpStatus::iteration_cap;
            if (sol.status == QcqpStatus::iteration_cap) {
                // Feasible to tolerance but boundary-only; no KKT certificate.
                double worst = 0.0;
                for (int i = 0; i < m_all; ++i)
                    worst = std::max(worst, problem.constraint_at(i, sol.w));
                sol.kkt_residual = std::max(worst, tol * 2.0);
            }
            return sol;
        }
        x0 = ph.x;
    }

    IpmOptions opt;
    opt.max_iters = problem.max_iterations;
    const IpmResult r = ipm(rp, x0, opt);
    const QcqpSolution base = finish(r.x, r.lambda);
    const auto refined = active_set_refine(r.x, r.lambda);
    const QcqpSolution polished = finish(refined.first, refined.second);
    return (polished.kkt_residual < base.kkt_residual) ? polished : base;
}

}  // namespace fdisac
