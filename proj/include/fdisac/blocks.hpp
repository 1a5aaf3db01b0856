#pragma once

#include <vector>

#include "fdisac/qcqp.hpp"
#include "fdisac/system.hpp"

namespace fdisac {

/// WMMSE auxiliaries: receive scalars beta_k and rate weights omega_k.
struct AuxVariables {
    VecC beta;
    VecR omega;
};

/// Closed-form auxiliary update. After it, omega_k = 1 + SINR_k and the
/// surrogate rate of each user equals its true rate.
AuxVariables update_aux(const EffectiveChannels& eff, const DesignVariables& vars,
                        double sigma_r_sq);

/// Surrogate rate of user k for fixed auxiliaries (concave in each block).
double surrogate_rate(const EffectiveChannels& eff, const DesignVariables& vars,
                      const AuxVariables& aux, double sigma_r_sq, int k);

double surrogate_sum_rate(const EffectiveChannels& eff, const DesignVariables& vars,
                          const AuxVariables& aux, double sigma_r_sq);

/// Quadratic-form coefficients of the per-block subproblems.
struct SurrogateCoefficients {
    // Beamformer (w = vec(W), size Nt^2): minimize w^H D1 w - c1 subject to
    // w^H D2 w - w^H D3 w + c2 <= 0 and ||w||^2 <= P_BS.
    MatC D1, D2, D3;
    double c1 = 0.0, c2 = 0.0;
    // Power (t_k = sqrt(q_k)): minimize sum a_k t_k^2 + b_k t_k - c3 subject
    // to sum d_k t_k^2 <= c3_hat and the per-user box.
    VecR a, b, d;
    double c3 = 0.0, c3_hat = 0.0;
    // User filters: minimize u_k^H F_k u_k - 2 Re(u_k^H h_tilde_k).
    std::vector<MatC> F;
    std::vector<VecC> h_tilde;
    // Radar filter: E1-vs-E2 quotient, SINR_r = Gamma_r * (u^H E2 u)/(u^H E1 u).
    MatC E1, E2;
};

SurrogateCoefficients build_surrogate_coefficients(const EffectiveChannels& eff,
                                                   const DesignVariables& vars,
                                                   const AuxVariables& aux,
                                                   const ScenarioConfig& cfg);

/// E1/E2 of the radar-filter quotient only (independent of the auxiliaries).
void build_radar_pencil(const EffectiveChannels& eff, const DesignVariables& vars,
                        const ScenarioConfig& cfg, MatC& E1, MatC& E2);

VecC vec(const MatC& m);
MatC unvec(const VecC& v, Eigen::Index rows, Eigen::Index cols);

/// Convex restriction of the beamformer subproblem at expansion point w0:
/// the concave quadratic in the sensing constraint is replaced by its
/// tangent minorant.
QcqpProblem build_beamformer_qcqp(const SurrogateCoefficients& sc, const ScenarioConfig& cfg,
                                  const VecC& w0);

/// Inner MM loop on W. Keeps every iterate feasible and the subproblem
/// objective nonincreasing. Throws FeasibilityLoss if the first restricted
/// problem is infeasible.
void update_beamformer(const EffectiveChannels& eff, DesignVariables& vars,
                       const AuxVariables& aux, const ScenarioConfig& cfg);

/// Power subproblem in t = sqrt(q) coordinates. `sensing` adds the radar
/// constraint sum d_k t_k^2 <= c3_hat (dropped for communication-only runs).
QcqpProblem build_power_qcqp(const SurrogateCoefficients& sc, const ScenarioConfig& cfg,
                             bool sensing = true);

/// Solves the power subproblem and writes q back. Throws FeasibilityLoss if
/// the sensing constraint cannot hold for any q >= 0.
void update_power(const EffectiveChannels& eff, DesignVariables& vars, const AuxVariables& aux,
                  const ScenarioConfig& cfg, bool sensing = true);

/// Closed-form MMSE-style user filters u_k = F_k^{-1} h_tilde_k. Users with
/// omega_k |beta_k|^2 = 0 keep their previous filter.
void update_user_filters(const EffectiveChannels& eff, DesignVariables& vars,
                         const AuxVariables& aux, const ScenarioConfig& cfg);

/// One raw minorize-maximize step of the radar filter: E1^{-1} (E2^H u_hat).
VecC radar_mm_step(const MatC& E1, const MatC& E2, const VecC& u_hat);

/// Radar-filter MM loop with per-step renormalization. Returns false when
/// the echo term vanishes (u0 kept unchanged). Throws FeasibilityLoss on an
/// infeasible starting filter.
bool update_radar_filter(const EffectiveChannels& eff, DesignVariables& vars,
                         const ScenarioConfig& cfg);

}  // namespace fdisac
