#include "fdisac/system.hpp"

namespace fdisac {

EffectiveChannels assemble_effective(const ChannelSet& channels, const VecC& phi) {
    const Eigen::Index M = channels.G_t.rows();
    if (phi.size() != M) throw InvalidInput("assemble_effective: phi length != M");
    if (channels.G_r.rows() != M) throw InvalidInput("assemble_effective: G_r rows != M");
    if (channels.H_s.rows() != channels.G_t.cols() || channels.H_s.cols() != channels.G_r.cols())
        throw InvalidInput("assemble_effective: H_s must be Nt x Nr");
    if (channels.h_T.size() != channels.G_t.cols() || channels.h_R.size() != channels.G_r.cols())
        throw InvalidInput("assemble_effective: target link dimensions");

    EffectiveChannels eff;
    eff.H = channels.alpha * channels.h_R * channels.h_T.adjoint();
    eff.G = channels.G_r.adjoint() * phi.asDiagonal() * channels.G_t + channels.H_s.adjoint();
    eff.hU.resize(channels.h_BU.size());
    for (std::size_t k = 0; k < channels.h_BU.size(); ++k) {
        if (channels.h_RU[k].size() != M)
            throw InvalidInput("assemble_effective: h_RU length != M");
        eff.hU[k] = channels.h_BU[k] + channels.G_r.adjoint() * phi.asDiagonal() * channels.h_RU[k];
    }
    return eff;
}

namespace {

/// Interference-plus-noise power at the output of filter u, excluding the
/// term selected by `skip_user` (-1 keeps all user terms).
double filtered_floor(const EffectiveChannels& eff, const DesignVariables& vars,
                      double sigma_r_sq, const VecC& u, int skip_user) {
    double acc = sigma_r_sq * u.squaredNorm();
    for (std::size_t i = 0; i < eff.hU.size(); ++i) {
        if (static_cast<int>(i) == skip_user) continue;
        acc += vars.q[static_cast<Eigen::Index>(i)] * std::norm(u.dot(eff.hU[i]));
    }
    acc += (u.adjoint() * eff.G * vars.W).squaredNorm();
    return acc;
}

}  // namespace

double radar_sinr(const EffectiveChannels& eff, const DesignVariables& vars, double sigma_r_sq) {
    if (vars.u0.isZero(0.0)) throw InvalidInput("radar_sinr: zero radar filter");
    const double signal = (vars.u0.adjoint() * eff.H * vars.W).squaredNorm();
    return signal / filtered_floor(eff, vars, sigma_r_sq, vars.u0, -1);
}

double user_sinr(const EffectiveChannels& eff, const DesignVariables& vars, double sigma_r_sq,
                 int k) {
    const auto& uk = vars.u.at(static_cast<std::size_t>(k));
    if (uk.isZero(0.0)) throw InvalidInput("user_sinr: zero user filter");
    const double signal = vars.q[k] * std::norm(uk.dot(eff.hU[static_cast<std::size_t>(k)]));
    double denom = filtered_floor(eff, vars, sigma_r_sq, uk, k);
    denom += (uk.adjoint() * eff.H * vars.W).squaredNorm();
    return signal / denom;
}

double sum_rate(const EffectiveChannels& eff, const DesignVariables& vars, double sigma_r_sq) {
    double rate = 0.0;
    for (std::size_t k = 0; k < eff.hU.size(); ++k)
        rate += std::log1p(user_sinr(eff, vars, sigma_r_sq, static_cast<int>(k)));
    return rate;
}

ConstraintResiduals constraint_residuals(const EffectiveChannels& eff,
                                         const DesignVariables& vars,
                                         const ScenarioConfig& cfg) {
    ConstraintResiduals res;
    res.radar_slack = radar_sinr(eff, vars, cfg.noise_watts()) - cfg.gamma_r_linear();
    res.power_slack = cfg.p_bs_watts() - vars.W.squaredNorm();
    res.user_power_slacks.resize(vars.q.size());
    for (Eigen::Index k = 0; k < vars.q.size(); ++k) {
        const double box = cfg.p_user_watts(static_cast<int>(k)) - vars.q[k];
        res.user_power_slacks[k] = std::min(box, vars.q[k]);  // negative if outside [0, P_Uk]
    }
    res.modulus_deviation = 0.0;
    for (Eigen::Index m = 0; m < vars.phi.size(); ++m)
        res.modulus_deviation = std::max(res.modulus_deviation,
                                         std::abs(std::abs(vars.phi[m]) - 1.0));
    return res;
}

}  // namespace fdisac
