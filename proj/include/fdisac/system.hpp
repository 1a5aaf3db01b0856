#pragma once

#include <vector>

#include "fdisac/scenario.hpp"

namespace fdisac {

/// The five optimization blocks.
struct DesignVariables {
    MatC W;               ///< Nt x Nt probing beamformer
    VecR q;               ///< K uplink transmit powers (watts)
    VecC u0;              ///< Nr radar filter
    std::vector<VecC> u;  ///< K user filters, length Nr
    VecC phi;             ///< M unit-modulus RIS reflection coefficients
};

/// Channels after folding in the RIS phase vector.
struct EffectiveChannels {
    MatC H;               ///< Nr x Nt target round trip, alpha * h_R h_T^H
    MatC G;               ///< Nr x Nt reflected probing path plus SI
    std::vector<VecC> hU; ///< K effective uplink vectors, length Nr
};

/// H = alpha h_R h_T^H; G = G_r^H diag(phi) G_t + H_s^H;
/// hU_k = h_BU_k + G_r^H diag(phi) h_RU_k.
EffectiveChannels assemble_effective(const ChannelSet& channels, const VecC& phi);

double radar_sinr(const EffectiveChannels& eff, const DesignVariables& vars, double sigma_r_sq);

double user_sinr(const EffectiveChannels& eff, const DesignVariables& vars, double sigma_r_sq,
                 int k);

/// Sum of log(1 + SINR_k) over users, in nats.
double sum_rate(const EffectiveChannels& eff, const DesignVariables& vars, double sigma_r_sq);

struct ConstraintResiduals {
    double radar_slack = 0.0;   ///< SINR_r - Gamma_r (linear)
    double power_slack = 0.0;   ///< P_BS - ||W||_F^2
    VecR user_power_slacks;     ///< P_Uk - q_k per user (negative q_k also reported here)
    double modulus_deviation = 0.0;  ///< max_m | |phi_m| - 1 |
};

ConstraintResiduals constraint_residuals(const EffectiveChannels& eff,
                                         const DesignVariables& vars,
                                         const ScenarioConfig& cfg);

}  // namespace fdisac
