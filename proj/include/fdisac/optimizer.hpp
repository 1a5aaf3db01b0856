#pragma once

#include "fdisac/pdd.hpp"

namespace fdisac {

/// Baseline-dependent switches: which blocks take part in the alternation.
struct RunMode {
    bool optimize_ris_phase = true;  ///< run the phase block (off for rnd-ris / no-ris)
    bool radar = true;               ///< keep the sensing SINR constraint (off for com-only)
    bool probe = true;               ///< transmit a probing waveform (off for com-only)
};

struct IterationRecord {
    int iteration = 0;
    double sum_rate_nats = 0.0;
    double radar_slack = 0.0;  ///< NaN when sensing is disabled
    double t_aux = 0.0, t_beamformer = 0.0, t_power = 0.0;
    double t_user_filters = 0.0, t_radar_filter = 0.0, t_phase = 0.0;
};

struct OptimizerState {
    ScenarioConfig config;
    RunMode mode;
    ChannelSet channels;
    EffectiveChannels eff;
    DesignVariables vars;
    AuxVariables aux;
    std::vector<IterationRecord> history;  ///< row 0 is the initial point
    std::vector<std::vector<PddTraceRow>> pdd_traces;  ///< one per outer iteration with a phase block
    int feasibility_halvings = 0;
    bool converged = false;
};

/// Feasible starting point: random phases, a matched probing beamformer at
/// the full power budget, full uplink powers (halved until the sensing
/// constraint holds), MMSE-style user filters, and a max-SINR radar filter.
/// Throws InfeasibleScenario when no feasible start exists.
OptimizerState initialize(const ChannelSet& channels, const ScenarioConfig& cfg,
                          std::uint64_t seed, const RunMode& mode = RunMode{});

/// Alternating outer loop over (aux, W, q, user filters, radar filter, phase)
/// until the relative sum-rate change drops below outer_tol. A block that
/// loses feasibility is rolled back; two consecutive rollbacks of the same
/// block abort the run.
void run(OptimizerState& state);

}  // namespace fdisac
