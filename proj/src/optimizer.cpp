#include "fdisac/optimizer.hpp"

#include <chrono>

namespace fdisac {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

VecC max_sinr_radar_filter(const EffectiveChannels& eff, const DesignVariables& vars,
                           const ScenarioConfig& cfg) {
    MatC E1, E2;
    build_radar_pencil(eff, vars, cfg, E1, E2);
    const Eigen::Index Nr = E1.rows();
    if (E2.cwiseAbs().maxCoeff() == 0.0) return VecC::Unit(Nr, 0);
    Eigen::GeneralizedSelfAdjointEigenSolver<MatC> ges(E2, E1);
    VecC u = ges.eigenvectors().col(Nr - 1);
    return u / u.norm();
}

}  // namespace

OptimizerState initialize(const ChannelSet& channels, const ScenarioConfig& cfg,
                          std::uint64_t seed, const RunMode& mode) {
    cfg.validate();
    const int K = cfg.num_users;
    const Eigen::Index Nt = cfg.num_tx_antennas, Nr = cfg.num_rx_antennas;

    OptimizerState st;
    st.config = cfg;
    st.mode = mode;
    st.channels = channels;

    Rng rng(seed * 0x9e3779b97f4a7c15ULL + 0x5851f42d4c957f2dULL);
    st.vars.phi = rng.unit_modulus_vector(cfg.num_ris_elements);

    if (mode.probe) {
        const VecC dir = channels.h_T / channels.h_T.norm();
        st.vars.W = std::sqrt(cfg.p_bs_watts() / double(Nt)) * dir *
                    Eigen::RowVectorXcd::Ones(Nt);
    } else {
        st.vars.W = MatC::Zero(Nt, Nt);
    }

    st.vars.q = VecR(K);
    for (int k = 0; k < K; ++k) st.vars.q[k] = cfg.p_user_watts(k);

    st.eff = assemble_effective(channels, st.vars.phi);

    // MMSE-style user filters from the full received covariance.
    {
        MatC cov = cfg.noise_watts() * MatC::Identity(Nr, Nr);
        for (int k = 0; k < K; ++k)
            cov += st.vars.q[k] * st.eff.hU[static_cast<std::size_t>(k)] *
                   st.eff.hU[static_cast<std::size_t>(k)].adjoint();
        const MatC HW = st.eff.H * st.vars.W;
        const MatC GW = st.eff.G * st.vars.W;
        cov += HW * HW.adjoint() + GW * GW.adjoint();
        const Eigen::LLT<MatC> llt(cov);
        st.vars.u.resize(static_cast<std::size_t>(K));
        for (int k = 0; k < K; ++k)
            st.vars.u[static_cast<std::size_t>(k)] =
                llt.solve(st.eff.hU[static_cast<std::size_t>(k)]);
    }

    st.vars.u0 = max_sinr_radar_filter(st.eff, st.vars, cfg);

    if (mode.radar) {
        // Halve the uplink powers until the sensing constraint holds.
        const double gamma = cfg.gamma_r_linear();
        while (radar_sinr(st.eff, st.vars, cfg.noise_watts()) < gamma) {
            if (st.feasibility_halvings >= 20)
                throw InfeasibleScenario(
                    "initialize: sensing SINR target unreachable for this draw");
            st.vars.q *= 0.5;
            st.vars.u0 = max_sinr_radar_filter(st.eff, st.vars, cfg);
            ++st.feasibility_halvings;
        }
    }

    st.aux = update_aux(st.eff, st.vars, cfg.noise_watts());

    IterationRecord rec;
    rec.iteration = 0;
    rec.sum_rate_nats = sum_rate(st.eff, st.vars, cfg.noise_watts());
    rec.radar_slack = mode.radar
                          ? radar_sinr(st.eff, st.vars, cfg.noise_watts()) - cfg.gamma_r_linear()
                          : std::numeric_limits<double>::quiet_NaN();
    st.history.push_back(rec);
    return st;
}

void run(OptimizerState& st) {
    const ScenarioConfig& cfg = st.config;
    const double sigma = cfg.noise_watts();
    if (st.history.empty()) throw InvalidState("run: state not initialized");

    enum Block { kBeamformer = 0, kPower, kRadarFilter, kPhase, kNumBlocks };
    int consecutive_rollbacks[kNumBlocks] = {0, 0, 0, 0};

    auto guarded = [&](Block block, const char* name, auto&& body) {
        const DesignVariables snapshot = st.vars;
        try {
            body();
            consecutive_rollbacks[block] = 0;
        } catch (const FeasibilityLoss& e) {
            st.vars = snapshot;
            st.eff = assemble_effective(st.channels, st.vars.phi);
            if (++consecutive_rollbacks[block] >= 2)
                throw FeasibilityLoss(std::string(name) + ": repeated feasibility loss (" +
                                      e.what() + ")");
        }
    };

    double prev_rate = st.history.back().sum_rate_nats;
    for (int iter = 1; iter <= cfg.outer_max_iters; ++iter) {
        IterationRecord rec;
        rec.iteration = iter;

        auto t0 = std::chrono::steady_clock::now();
        st.aux = update_aux(st.eff, st.vars, sigma);
        rec.t_aux = seconds_since(t0);

        t0 = std::chrono::steady_clock::now();
        if (st.mode.probe)
            guarded(kBeamformer, "beamformer block",
                    [&] { update_beamformer(st.eff, st.vars, st.aux, cfg); });
        rec.t_beamformer = seconds_since(t0);

        t0 = std::chrono::steady_clock::now();
        guarded(kPower, "power block",
                [&] { update_power(st.eff, st.vars, st.aux, cfg, st.mode.radar); });
        rec.t_power = seconds_since(t0);

        t0 = std::chrono::steady_clock::now();
        update_user_filters(st.eff, st.vars, st.aux, cfg);
        rec.t_user_filters = seconds_since(t0);

        t0 = std::chrono::steady_clock::now();
        if (st.mode.radar && st.mode.probe)
            guarded(kRadarFilter, "radar filter block",
                    [&] { update_radar_filter(st.eff, st.vars, cfg); });
        rec.t_radar_filter = seconds_since(t0);

        t0 = std::chrono::steady_clock::now();
        if (st.mode.optimize_ris_phase) {
            guarded(kPhase, "phase block", [&] {
                const PhaseOptResult res =
                    optimize_phase(st.channels, st.vars, st.aux, cfg, st.mode.radar);
                st.pdd_traces.push_back(res.trace);
            });
            st.eff = assemble_effective(st.channels, st.vars.phi);
        }
        rec.t_phase = seconds_since(t0);

        rec.sum_rate_nats = sum_rate(st.eff, st.vars, sigma);
        rec.radar_slack = st.mode.radar ? radar_sinr(st.eff, st.vars, sigma) - cfg.gamma_r_linear()
                                        : std::numeric_limits<double>::quiet_NaN();
        st.history.push_back(rec);

        const double change = std::abs(rec.sum_rate_nats - prev_rate);
        if (change <= cfg.outer_tol * std::max(std::abs(prev_rate), 1e-12)) {
            st.converged = true;
            break;
        }
        prev_rate = rec.sum_rate_nats;
    }
}

}  // namespace fdisac
