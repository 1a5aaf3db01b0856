#include "fdisac/pdd.hpp"

namespace fdisac {

PhaseCoefficients build_phase_coefficients(const ChannelSet& channels,
                                           const DesignVariables& vars, const AuxVariables& aux,
                                           const ScenarioConfig& cfg) {
    const int K = static_cast<int>(channels.h_BU.size());
    const Eigen::Index M = channels.G_t.rows();
    const double sigma = cfg.noise_watts();
    const double gamma = cfg.gamma_r_linear();
    const MatC H = channels.alpha * channels.h_R * channels.h_T.adjoint();

    auto reflect_row = [&](const VecC& u) { return (channels.G_r * u).eval(); };
    // Per-filter probe coupling W^H G_t^H diag(G_r u); the phase quadratics
    // are Grams of its conjugate.
    auto probe_matrix = [&](const VecC& u) {
        const VecC r = channels.G_r * u;
        return (vars.W.adjoint() * channels.G_t.adjoint() * r.asDiagonal()).eval();
    };

    const Eigen::Index Nt = vars.W.rows();
    PhaseCoefficients pc;
    pc.x = VecC::Zero(M);
    pc.x0 = VecC::Zero(M);
    pc.c5 = 0.0;
    pc.T_factor = MatC::Zero(M, K * (K + Nt));

    std::vector<VecC> Pu(static_cast<std::size_t>(K));  // P_i^H u_k built per k below
    for (int k = 0; k < K; ++k) {
        const VecC& uk = vars.u[static_cast<std::size_t>(k)];
        const double wgt = aux.omega[k] * std::norm(aux.beta[k]);
        const VecC ru = reflect_row(uk);  // G_r u_k
        for (int i = 0; i < K; ++i)
            Pu[static_cast<std::size_t>(i)] =
                channels.h_RU[static_cast<std::size_t>(i)].conjugate().asDiagonal() * ru;
        const MatC Sk = probe_matrix(uk);
        const Eigen::RowVectorXcd vk = uk.adjoint() * channels.H_s.adjoint() * vars.W;

        VecC lin = -wgt * (Sk.transpose() * vk.transpose());
        double cst = 0.0;
        const Eigen::Index col0 = static_cast<Eigen::Index>(k) * (K + Nt);
        pc.T_factor.block(0, col0 + K, M, Nt) = std::sqrt(wgt) * Sk.conjugate().adjoint();
        for (int i = 0; i < K; ++i) {
            const VecC& pui = Pu[static_cast<std::size_t>(i)];
            const cx direct = uk.dot(channels.h_BU[static_cast<std::size_t>(i)]);  // u_k^H h_BU,i
            pc.T_factor.col(col0 + i) = std::sqrt(wgt * vars.q[i]) * pui;
            lin -= wgt * vars.q[i] * pui * direct;
            cst += vars.q[i] * std::norm(direct);
        }
        const cx gain0 = uk.dot(channels.h_BU[static_cast<std::size_t>(k)]);
        lin += aux.omega[k] * aux.beta[k] * std::sqrt(vars.q[k]) * Pu[static_cast<std::size_t>(k)];
        pc.x += lin;
        pc.c5 += std::log(aux.omega[k]) - aux.omega[k] + 1.0 +
                 2.0 * std::real(aux.omega[k] * std::conj(aux.beta[k]) * std::sqrt(vars.q[k]) *
                                 gain0) -
                 wgt * (cst + (uk.adjoint() * H * vars.W).squaredNorm() + vk.squaredNorm() +
                        sigma * uk.squaredNorm());
    }
    pc.T = pc.T_factor * pc.T_factor.adjoint();

    // Sensing constraint quadratic in phi, kept in factored form as well:
    // T0 = F F^H with one column per user term and per probe row.
    {
        const VecC& u0 = vars.u0;
        const VecC ru = reflect_row(u0);
        const MatC S0 = probe_matrix(u0);
        const Eigen::RowVectorXcd v0 = u0.adjoint() * channels.H_s.adjoint() * vars.W;
        pc.x0 = -(S0.transpose() * v0.transpose());
        pc.c6 = v0.squaredNorm() + sigma * u0.squaredNorm() -
                (u0.adjoint() * H * vars.W).squaredNorm() / gamma;
        pc.T0_factor = MatC::Zero(M, K + Nt);
        pc.T0_factor.rightCols(Nt) = S0.conjugate().adjoint();
        for (int k = 0; k < K; ++k) {
            const VecC pu = channels.h_RU[static_cast<std::size_t>(k)].conjugate().asDiagonal() * ru;
            const cx direct = u0.dot(channels.h_BU[static_cast<std::size_t>(k)]);
            pc.T0_factor.col(k) = std::sqrt(vars.q[k]) * pu;
            pc.x0 -= vars.q[k] * pu * direct;
            pc.c6 += vars.q[k] * std::norm(direct);
        }
        pc.T0 = pc.T0_factor * pc.T0_factor.adjoint();
    }

    pc.T = 0.5 * (pc.T + pc.T.adjoint()).eval();
    pc.T0 = 0.5 * (pc.T0 + pc.T0.adjoint()).eval();
    return pc;
}

double phase_objective(const PhaseCoefficients& pc, const VecC& phi) {
    return std::real((phi.adjoint() * pc.T * phi).value()) - 2.0 * pc.x.dot(phi).real() - pc.c5;
}

double phase_constraint(const PhaseCoefficients& pc, const VecC& phi) {
    return std::real((phi.adjoint() * pc.T0 * phi).value()) - 2.0 * pc.x0.dot(phi).real() + pc.c6;
}

double al_objective(const PhaseCoefficients& pc, const VecC& phi, const VecC& psi,
                    const VecC& lambda, double rho) {
    return phase_objective(pc, phi) + (phi - psi).squaredNorm() / (2.0 * rho) +
           lambda.dot(phi - psi).real();
}

VecC solve_phi_subproblem(const PhaseCoefficients& pc, const PddState& state,
                          const ScenarioConfig& cfg, bool radar_constraint) {
    const Eigen::Index M = state.phi.size();
    const double rho = state.rho;

    QcqpProblem prob;
    prob.A = pc.T + MatC::Identity(M, M) / (2.0 * rho);
    prob.b = pc.x + state.psi / (2.0 * rho) - 0.5 * state.lambda;
    prob.c = -pc.c5 + double(M) / (2.0 * rho) - state.lambda.dot(state.psi).real();
    prob.tolerance = cfg.qcqp_tol;
    prob.max_iterations = cfg.qcqp_max_iters;
    if (radar_constraint) {
        QcqpProblem::Constraint sensing;
        sensing.P = pc.T0;
        sensing.r = pc.x0;
        sensing.s = pc.c6;
        prob.constraints.push_back(std::move(sensing));
    }

    const QcqpSolution sol = solve(prob, state.phi);
    if (sol.status == QcqpStatus::infeasible)
        throw FeasibilityLoss("solve_phi_subproblem: sensing constraint infeasible");

    // The warm start is feasible, so never accept an AL increase.
    const double al_old = al_objective(pc, state.phi, state.psi, state.lambda, rho);
    const double al_new = al_objective(pc, sol.w, state.psi, state.lambda, rho);
    bool feasible = true;
    if (radar_constraint) {
        const double scale = std::max({std::abs(pc.c6), pc.T0.cwiseAbs().maxCoeff(), 1e-300});
        feasible = phase_constraint(pc, sol.w) <= 1e-9 * scale;
    }
    if (!feasible || al_new > al_old) return state.phi;
    return sol.w;
}

namespace {

/// Per-outer-iteration machinery for the inner alternation. All solves go
/// through the low-rank factors of T and T0, so one pass costs O(M r)
/// instead of O(M^3) refactorizations.
struct InnerStep {
    const PhaseCoefficients* pc = nullptr;
    double eps = 0.0;  ///< 1/(2 rho)
    Eigen::LDLT<MatC> core;  ///< eps I + F^H F for the prox inverse
    MatC F0;                 ///< rank-reduced constraint factor, F0 F0^H = T0
    MatC AiF;                ///< A^{-1} F0
    MatC S;                  ///< F0^H A^{-1} F0 (positive definite on the reduced space)
    VecC b;                  ///< A^{-1} x0

    InnerStep(const PhaseCoefficients& coeffs, double rho) : pc(&coeffs), eps(1.0 / (2.0 * rho)) {
        const Eigen::Index r = coeffs.T_factor.cols();
        core.compute((eps * MatC::Identity(r, r) + coeffs.T_factor.adjoint() * coeffs.T_factor)
                         .eval());
        // Drop the factor's null directions (rank-one W makes the probe
        // block rank deficient) so the small dual Gram stays invertible.
        const MatC& F = coeffs.T0_factor;
        Eigen::SelfAdjointEigenSolver<MatC> es(F.adjoint() * F);
        const double lam_max = std::max(es.eigenvalues().maxCoeff(), 0.0);
        Eigen::Index kept = 0;
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
            if (es.eigenvalues()[i] > 1e-14 * std::max(lam_max, 1e-300)) ++kept;
        F0 = F * es.eigenvectors().rightCols(kept);
        AiF = apply_inverse(F0);
        S = F0.adjoint() * AiF;
        b = apply_inverse(coeffs.x0);
    }

    /// (T + eps I)^{-1} V through the factor of T.
    MatC apply_inverse(const MatC& v) const {
        return (v - pc->T_factor * core.solve(pc->T_factor.adjoint() * v)) / eps;
    }

    double objective(const VecC& phi) const {
        return (pc->T_factor.adjoint() * phi).squaredNorm() - 2.0 * pc->x.dot(phi).real() -
               pc->c5;
    }

    double constraint(const VecC& phi) const {
        return (F0.adjoint() * phi).squaredNorm() - 2.0 * pc->x0.dot(phi).real() + pc->c6;
    }

    double al_value(const VecC& phi, const VecC& psi, const VecC& lambda, double rho) const {
        return objective(phi) + (phi - psi).squaredNorm() / (2.0 * rho) +
               lambda.dot(phi - psi).real();
    }

    VecC phi_at(double mu, const VecC& a) const {
        const VecC w = a + mu * b;
        const Eigen::Index r = S.cols();
        if (r == 0) return w;
        const MatC m_mu = S + MatC::Identity(r, r) / mu;
        return w - AiF * m_mu.ldlt().solve((F0.adjoint() * w).eval());
    }

    /// d g(mu) / d mu = -2 (T0 phi - x0)^H A_mu^{-1} (T0 phi - x0) <= 0.
    double constraint_slope(double mu, const VecC& phi) const {
        const VecC v = F0 * (F0.adjoint() * phi) - pc->x0;
        VecC w = apply_inverse(v);
        if (S.cols() > 0) {
            const MatC m_mu = S + MatC::Identity(S.cols(), S.cols()) / mu;
            w -= AiF * m_mu.ldlt().solve((F0.adjoint() * w).eval());
        }
        return -2.0 * v.dot(w).real();
    }

    /// Safeguarded Newton on the constraint multiplier (g is monotone
    /// nonincreasing). Returns false when no bracket exists (caller falls
    /// back to the full solver).
    bool constrained_solve(const VecC& a, double& mu_warm, VecC& phi_out) const {
        double lo = 0.0, hi = std::max(mu_warm, 1e-6);
        double g_hi = constraint(phi_at(hi, a));
        int grow = 0;
        while (g_hi > 0.0 && grow++ < 100) {
            lo = hi;
            hi *= 4.0;
            if (hi > 1e30) return false;
            g_hi = constraint(phi_at(hi, a));
        }
        if (g_hi > 0.0) return false;

        double mu = 0.5 * (lo + hi);
        VecC best = phi_at(hi, a);
        double g_best = g_hi;
        for (int it = 0; it < 40; ++it) {
            if ((hi - lo) <= 1e-13 * hi) break;
            const VecC phi = phi_at(mu, a);
            const double g = constraint(phi);
            if (g > 0.0) {
                lo = mu;
            } else {
                hi = mu;
                best = phi;
                g_best = g;
                if (-g <= 1e-13 * std::max(1.0, std::abs(pc->c6))) break;
            }
            const double slope = constraint_slope(mu, phi);
            double next = (slope < 0.0) ? mu - g / slope : 0.5 * (lo + hi);
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            mu = next;
        }
        (void)g_best;
        mu_warm = hi;
        phi_out = best;  // feasible side
        return true;
    }
};

}  // namespace

VecC solve_psi_subproblem(const VecC& phi, const VecC& lambda, double rho, const VecC& psi_prev) {
    VecC psi(phi.size());
    for (Eigen::Index m = 0; m < phi.size(); ++m) {
        const cx z = phi[m] + rho * lambda[m];
        psi[m] = (std::abs(z) < 1e-15) ? psi_prev[m] : cx(std::polar(1.0, std::arg(z)));
    }
    return psi;
}

void outer_update(PddState& state, const ScenarioConfig& cfg) {
    const double gap = (state.phi - state.psi).cwiseAbs().maxCoeff();
    if (gap <= state.eta) {
        state.lambda += (state.phi - state.psi) / state.rho;
        // Track the achieved gap so that a stalled dual phase re-triggers
        // penalty tightening instead of drifting above the threshold forever.
        state.eta = std::min(state.eta, gap);
    } else {
        state.rho *= cfg.pdd_penalty_shrink;
    }
    state.eta *= cfg.pdd_eta_shrink;
    state.outer_iter += 1;
}

PhaseOptResult optimize_phase(const ChannelSet& channels, DesignVariables& vars,
                              const AuxVariables& aux, const ScenarioConfig& cfg,
                              bool radar_constraint) {
    const PhaseCoefficients pc = build_phase_coefficients(channels, vars, aux, cfg);
    const VecC entry_phi = vars.phi;
    const double entry_obj = phase_objective(pc, entry_phi);

    PddState state;
    state.phi = entry_phi;
    state.psi = entry_phi;
    state.lambda = VecC::Zero(entry_phi.size());
    state.rho = cfg.pdd_rho0;
    state.eta = cfg.pdd_eta0;

    PhaseOptResult result;
    VecC phi_prev_outer = entry_phi;
    double mu_warm = 0.0;
    for (int outer = 1; outer <= cfg.pdd_outer_max_iters; ++outer) {
        // The alternation contracts slowly along directions where T is flat,
        // so it may need thousands of passes. All per-pass algebra runs
        // through the low-rank factors of T and T0; the interior-point
        // solver remains as fallback for an unbracketable active constraint.
        const InnerStep inner(pc, state.rho);
        double al_prev = std::numeric_limits<double>::infinity();
        double al_cur = inner.al_value(state.phi, state.psi, state.lambda, state.rho);
        VecC move_last;
        double move_last_norm = 0.0, rate_prev = 0.0;
        int jump_cooldown = 0;
        for (int t = 0; t < cfg.inner_bcd_max_iters; ++t) {
            ++result.total_inner_passes;
            const VecC phi_before = state.phi;
            const VecC rhs = pc.x + state.psi / (2.0 * state.rho) - 0.5 * state.lambda;
            VecC candidate = inner.apply_inverse(rhs);
            if (radar_constraint && inner.constraint(candidate) > 0.0) {
                if (!inner.constrained_solve(candidate, mu_warm, candidate))
                    candidate = solve_phi_subproblem(pc, state, cfg, radar_constraint);
            }
            // Exact minimizers keep the AL monotone; guard against rounding.
            if (inner.al_value(candidate, state.psi, state.lambda, state.rho) <= al_cur)
                state.phi = candidate;
            state.psi = solve_psi_subproblem(state.phi, state.lambda, state.rho, state.psi);
            al_cur = inner.al_value(state.phi, state.psi, state.lambda, state.rho);

            VecC move = state.phi - phi_before;
            double move_norm = move.norm();
            // The alternation contracts geometrically with a real nonnegative
            // dominant rate; once the rate estimate is stable, sum the
            // remaining series in one step (kept only if the AL agrees).
            if (move_last_norm > 0.0 && move_norm > 0.0 && jump_cooldown == 0) {
                const double rate = move_norm / move_last_norm;
                // near rate 1 the estimate jitter exceeds any fixed stability
                // gate, so periodically force an attempt; a rejected jump
                // costs one AL evaluation.
                const bool stable = std::abs(rate - rate_prev) < 0.05 * rate;
                if (rate > 0.2 && rate < 0.9999995 && (stable || t % 32 == 31)) {
                    const VecC phi_jump =
                        state.phi + move * std::min(rate / (1.0 - rate), 1e6);
                    const bool jump_ok =
                        !radar_constraint || inner.constraint(phi_jump) <= 0.0;
                    bool accepted = false;
                    if (jump_ok) {
                        const VecC psi_jump =
                            solve_psi_subproblem(phi_jump, state.lambda, state.rho, state.psi);
                        const double al_jump =
                            inner.al_value(phi_jump, psi_jump, state.lambda, state.rho);
                        if (al_jump <= al_cur) {
                            move = phi_jump - phi_before;
                            move_norm = 0.0;  // restart the rate estimate
                            state.phi = phi_jump;
                            state.psi = psi_jump;
                            al_cur = al_jump;
                            accepted = true;
                        }
                    }
                    jump_cooldown = accepted ? 2 : 8;
                }
                rate_prev = rate;
            } else if (jump_cooldown > 0) {
                --jump_cooldown;
            }
            move_last = move;
            move_last_norm = move_norm;

            const double moved = move.cwiseAbs().maxCoeff();
            if (moved <= cfg.inner_bcd_move_tol) break;
            if (std::abs(al_prev - al_cur) <= cfg.inner_bcd_tol * (1.0 + std::abs(al_cur)) &&
                moved <= 1e3 * cfg.inner_bcd_move_tol)
                break;
            al_prev = al_cur;
        }
        PddTraceRow row;
        row.outer_iter = outer;
        row.phi_psi_inf = (state.phi - state.psi).cwiseAbs().maxCoeff();
        row.delta_phi_inf = (state.phi - phi_prev_outer).cwiseAbs().maxCoeff();
        row.al_value = al_objective(pc, state.phi, state.psi, state.lambda, state.rho);
        result.trace.push_back(row);
        result.outer_iterations = outer;
        phi_prev_outer = state.phi;

        // Terminate only once the iterates have settled too: a small
        // phi-psi gap alone can coexist with the solution still drifting.
        if ((state.phi - state.psi).norm() <= cfg.pdd_tol() &&
            row.delta_phi_inf <= cfg.pdd_tol_scale) {
            result.converged = true;
            break;
        }
        outer_update(state, cfg);
    }

    // Commit the exactly unit-modulus copy, unless it lost the sensing
    // constraint or surrogate value; then keep the entry phase.
    VecC candidate = state.psi;
    bool ok = phase_objective(pc, candidate) <= entry_obj + 1e-6;
    if (ok && radar_constraint) {
        const EffectiveChannels eff = assemble_effective(channels, candidate);
        const double slack = radar_sinr(eff, vars, cfg.noise_watts()) - cfg.gamma_r_linear();
        ok = slack >= -1e-7 * std::max(1.0, cfg.gamma_r_linear());
    }
    if (!ok) {
        candidate = entry_phi;
        for (Eigen::Index m = 0; m < candidate.size(); ++m) {
            const double mag = std::abs(candidate[m]);
            if (mag > 0.0) candidate[m] /= mag;
        }
        result.fell_back = true;
    }
    vars.phi = candidate;
    return result;
}

}  // namespace fdisac
