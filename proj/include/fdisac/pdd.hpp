#pragma once

#include <vector>

#include "fdisac/blocks.hpp"

namespace fdisac {

/// Quadratic-form coefficients of the phase subproblem: for any phi,
///   phi^H T phi - 2 Re(x^H phi) - c5   is minus the surrogate sum rate,
///   phi^H T0 phi - 2 Re(x0^H phi) + c6 <= 0 is the sensing constraint.
struct PhaseCoefficients {
    MatC T, T0;
    VecC x, x0;
    double c5 = 0.0, c6 = 0.0;
    MatC T_factor;   ///< M x K(K+Nt) cached factor with T = F F^H
    MatC T0_factor;  ///< M x (K+Nt) cached factor with T0 = F F^H
};

PhaseCoefficients build_phase_coefficients(const ChannelSet& channels,
                                           const DesignVariables& vars, const AuxVariables& aux,
                                           const ScenarioConfig& cfg);

double phase_objective(const PhaseCoefficients& pc, const VecC& phi);
double phase_constraint(const PhaseCoefficients& pc, const VecC& phi);

/// Penalty-dual state: phi and its unit-modulus copy psi, the multiplier,
/// the penalty weight, and the dual-trigger threshold.
struct PddState {
    VecC phi;
    VecC psi;
    VecC lambda;
    double rho = 10.0;
    double eta = 0.1;
    int outer_iter = 0;
};

/// Augmented-Lagrangian value at (phi, psi).
double al_objective(const PhaseCoefficients& pc, const VecC& phi, const VecC& psi,
                    const VecC& lambda, double rho);

/// Convex phi-step of the inner alternation (proximal objective plus the
/// sensing constraint when enabled). Never increases the AL value.
VecC solve_phi_subproblem(const PhaseCoefficients& pc, const PddState& state,
                          const ScenarioConfig& cfg, bool radar_constraint);

/// Closed-form psi-step: entrywise phase alignment with phi + rho*lambda.
/// Entries with magnitude below 1e-15 keep their previous value.
VecC solve_psi_subproblem(const VecC& phi, const VecC& lambda, double rho, const VecC& psi_prev);

/// Outer dual-ascent / penalty-tightening switch; shrinks the trigger
/// threshold either way.
void outer_update(PddState& state, const ScenarioConfig& cfg);

struct PddTraceRow {
    int outer_iter = 0;
    double phi_psi_inf = 0.0;   ///< ||phi - psi||_inf after the inner loop
    double delta_phi_inf = 0.0; ///< ||phi - phi_prev_outer||_inf
    double al_value = 0.0;
};

struct PhaseOptResult {
    bool converged = false;   ///< ||phi - psi||_2 reached tolerance
    bool fell_back = false;   ///< candidate failed its exit checks; entry phase kept
    int outer_iterations = 0;
    long total_inner_passes = 0;
    std::vector<PddTraceRow> trace;
};

/// Full two-layer phase optimization. Commits the exactly unit-modulus psi
/// unless it loses sensing feasibility or surrogate value, in which case the
/// entry phase is kept. Updates vars.phi in place.
PhaseOptResult optimize_phase(const ChannelSet& channels, DesignVariables& vars,
                              const AuxVariables& aux, const ScenarioConfig& cfg,
                              bool radar_constraint = true);

}  // namespace fdisac
