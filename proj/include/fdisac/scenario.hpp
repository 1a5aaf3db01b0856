#pragma once

#include <filesystem>
#include <vector>

#include "fdisac/common.hpp"

namespace fdisac {

/// All physical and algorithmic parameters of one experiment.
struct ScenarioConfig {
    // Sizes
    int num_users = 4;           ///< K
    int num_ris_elements = 100;  ///< M
    int num_tx_antennas = 4;     ///< Nt
    int num_rx_antennas = 4;     ///< Nr

    // Geometry (meters)
    Vec3 bs_position{0.0, 0.0, 4.5};
    Vec3 ris_position{0.0, -100.0, 2.5};
    Vec3 target_position{0.0, 6.0, 12.5};
    double user_placement_radius = 10.0;
    double user_altitude = 1.5;

    // Budgets and statistics
    double p_bs_dbm = 30.0;
    std::vector<double> p_user_dbm{23.0};  ///< scalar broadcasts to all users
    double noise_dbm = -90.0;
    double gamma_r_db = 5.0;
    double sigma_target_sq = 1.0;  ///< RCS second moment
    double rician_si_db = 5.0;
    double rician_bs_ris_db = 4.0;
    double alpha_bu = 3.6;
    double alpha_br = 2.7;
    double alpha_ru = 2.4;
    double alpha_bt = 2.2;
    double alpha_tb = 2.2;
    double rho_si_db = -110.0;
    double reference_pathloss_db = -30.0;

    std::uint64_t seed = 1;

    // Solver tolerances and iteration caps
    double qcqp_tol = 1e-8;
    int qcqp_max_iters = 500;
    double mm_tol = 1e-6;
    int mm_max_iters = 30;
    double inner_bcd_tol = 1e-8;
    double inner_bcd_move_tol = 1e-10;
    int inner_bcd_max_iters = 20000;
    int pdd_outer_max_iters = 50;
    double pdd_tol_scale = 1e-6;  ///< pdd_tol = pdd_tol_scale * sqrt(M)
    double pdd_rho0 = 10.0;
    double pdd_penalty_shrink = 0.85;
    double pdd_eta0 = 1.0;
    double pdd_eta_shrink = 0.9;
    double outer_tol = 1e-4;
    int outer_max_iters = 50;

    double p_bs_watts() const { return dbm_to_watts(p_bs_dbm); }
    double noise_watts() const { return dbm_to_watts(noise_dbm); }
    double gamma_r_linear() const { return db_to_linear(gamma_r_db); }
    double p_user_watts(int k) const;
    double pdd_tol() const { return pdd_tol_scale * std::sqrt(double(num_ris_elements)); }

    /// Throws InvalidInput if sizes, budgets, or radii are out of range.
    void validate() const;
};

/// Experiment-scale presets: `paper` is the published setup, `desk` is a
/// small instance for fast test sweeps.
ScenarioConfig paper_config();
ScenarioConfig desk_config();

/// Parse a flat `key = value` config file (see README for the schema).
/// Unknown keys raise InvalidInput.
ScenarioConfig load_config_file(const std::filesystem::path& path);

/// Apply one `key = value` assignment to a config.
void apply_config_entry(ScenarioConfig& cfg, const std::string& key, const std::string& value);

/// All raw channel matrices and vectors drawn for one scenario realization.
struct ChannelSet {
    MatC G_t;                  ///< M x Nt, BS -> RIS
    MatC G_r;                  ///< M x Nr, RIS -> BS
    std::vector<VecC> h_BU;    ///< K vectors, length Nr
    std::vector<VecC> h_RU;    ///< K vectors, length M
    VecC h_T;                  ///< Nt, BS -> target
    VecC h_R;                  ///< Nr, target -> BS
    MatC H_s;                  ///< Nt x Nr self-interference
    cx alpha{0.0, 0.0};        ///< RCS coefficient
    std::vector<Vec3> user_positions;
};

/// Linear power gain at `distance` meters for the given exponent and
/// reference gain (dB at 1 m).
double path_loss(double distance_m, double exponent, double reference_db);

/// Half-wavelength ULA response for a unit direction vector; entries have
/// unit modulus. The array axis is the global x-axis.
VecC steering_vector(int n, const Vec3& unit_direction);

/// Draw one scenario realization. Pure function of (config, seed): the same
/// pair gives a bit-identical ChannelSet.
ChannelSet draw_channels(const ScenarioConfig& cfg, std::uint64_t seed);

}  // namespace fdisac
