#include "fdisac/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

namespace fdisac {

double ScenarioConfig::p_user_watts(int k) const {
    if (p_user_dbm.empty()) throw InvalidInput("p_user_dbm is empty");
    const std::size_t idx = (p_user_dbm.size() == 1) ? 0 : static_cast<std::size_t>(k);
    if (idx >= p_user_dbm.size()) throw InvalidInput("p_user_dbm shorter than num_users");
    return dbm_to_watts(p_user_dbm[idx]);
}

void ScenarioConfig::validate() const {
    if (num_users < 1 || num_ris_elements < 1 || num_tx_antennas < 1 || num_rx_antennas < 1)
        throw InvalidInput("K, M, Nt, Nr must all be >= 1");
    if (user_placement_radius <= 0.0) throw InvalidInput("user_placement_radius must be > 0");
    if (p_bs_watts() <= 0.0 || noise_watts() <= 0.0)
        throw InvalidInput("power budgets must be positive");
    if (p_user_dbm.size() != 1 && p_user_dbm.size() != static_cast<std::size_t>(num_users))
        throw InvalidInput("p_user_dbm must be a scalar or one entry per user");
    for (int k = 0; k < num_users; ++k)
        if (p_user_watts(k) <= 0.0) throw InvalidInput("per-user power budget must be positive");
    if (sigma_target_sq < 0.0) throw InvalidInput("sigma_target_sq must be >= 0");
}

ScenarioConfig paper_config() {
    return ScenarioConfig{};  // defaults are the published setup
}

ScenarioConfig desk_config() {
    ScenarioConfig cfg;
    cfg.num_users = 2;
    cfg.num_ris_elements = 16;
    return cfg;
}

double path_loss(double distance_m, double exponent, double reference_db) {
    if (distance_m <= 0.0) throw InvalidInput("path_loss: distance must be > 0");
    return db_to_linear(reference_db) * std::pow(distance_m, -exponent);
}

VecC steering_vector(int n, const Vec3& unit_direction) {
    VecC a(n);
    const double phase_step = M_PI * unit_direction.x();  // half-wavelength spacing
    for (int i = 0; i < n; ++i) a[i] = std::polar(1.0, phase_step * double(i));
    return a;
}

namespace {

Vec3 unit_from_to(const Vec3& from, const Vec3& to) {
    const Vec3 d = to - from;
    const double n = d.norm();
    if (n <= 0.0) throw InvalidInput("draw_channels: coincident positions in geometry");
    return d / n;
}

/// Rician mix of a deterministic rank-one LoS product and an i.i.d. NLoS
/// part, scaled so the mean squared entry equals `pl`.
MatC rician_matrix(Rng& rng, double pl, double kappa_db, const VecC& a_rx, const VecC& a_tx) {
    const double kappa = db_to_linear(kappa_db);
    const MatC los = a_rx * a_tx.adjoint();
    const MatC nlos = rng.complex_gaussian_matrix(a_rx.size(), a_tx.size());
    return std::sqrt(pl) * (std::sqrt(kappa / (1.0 + kappa)) * los +
                            std::sqrt(1.0 / (1.0 + kappa)) * nlos);
}

}  // namespace

ChannelSet draw_channels(const ScenarioConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const int K = cfg.num_users, M = cfg.num_ris_elements;
    const int Nt = cfg.num_tx_antennas, Nr = cfg.num_rx_antennas;
    Rng rng(seed);

    const double d_br = (cfg.bs_position - cfg.ris_position).norm();
    const double d_bt = (cfg.bs_position - cfg.target_position).norm();
    if (d_br <= 0.0 || d_bt <= 0.0)
        throw InvalidInput("draw_channels: coincident positions in geometry");

    ChannelSet ch;

    // BS <-> RIS, Rician with a deterministic steering-product LoS component.
    const Vec3 ris_to_bs = unit_from_to(cfg.ris_position, cfg.bs_position);
    const Vec3 bs_to_ris = -ris_to_bs;
    const double pl_br = path_loss(d_br, cfg.alpha_br, cfg.reference_pathloss_db);
    const VecC a_ris = steering_vector(M, ris_to_bs);
    ch.G_t = rician_matrix(rng, pl_br, cfg.rician_bs_ris_db, a_ris, steering_vector(Nt, bs_to_ris));
    ch.G_r = rician_matrix(rng, pl_br, cfg.rician_bs_ris_db, a_ris, steering_vector(Nr, bs_to_ris));

    // Self-interference: Rician with a per-seed random unit-Frobenius LoS
    // structure; mean squared entry equals 10^(rho_si/10).
    {
        const double rho = db_to_linear(cfg.rho_si_db);
        const double kappa = db_to_linear(cfg.rician_si_db);
        MatC si_los = rng.complex_gaussian_matrix(Nt, Nr);
        si_los *= std::sqrt(double(Nt) * double(Nr)) / si_los.norm();
        const MatC si_nlos = rng.complex_gaussian_matrix(Nt, Nr);
        ch.H_s = std::sqrt(rho) * (std::sqrt(kappa / (1.0 + kappa)) * si_los +
                                   std::sqrt(1.0 / (1.0 + kappa)) * si_nlos);
    }

    // BS <-> target: LoS array responses. The round-trip path loss lives in
    // the echo coefficient alpha, once, so that the cascaded target channel
    // alpha h_R h_T^H carries it exactly one time.
    const Vec3 bs_to_target = unit_from_to(cfg.bs_position, cfg.target_position);
    ch.h_T = steering_vector(Nt, bs_to_target);
    ch.h_R = steering_vector(Nr, bs_to_target);

    // RCS coefficient: CN(0, sigma_t^2 * PL_BT * PL_TB).
    ch.alpha = std::sqrt(cfg.sigma_target_sq *
                         path_loss(d_bt, cfg.alpha_bt, cfg.reference_pathloss_db) *
                         path_loss(d_bt, cfg.alpha_tb, cfg.reference_pathloss_db)) *
               rng.complex_gaussian();

    // Users: uniform over the half-disc x >= ris_x around the RIS, then
    // Rayleigh links to the BS (direct) and the RIS.
    ch.h_BU.resize(K);
    ch.h_RU.resize(K);
    ch.user_positions.resize(K);
    for (int k = 0; k < K; ++k) {
        double dx = 0.0, dy = 0.0;
        do {
            dx = rng.uniform(0.0, cfg.user_placement_radius);
            dy = rng.uniform(-cfg.user_placement_radius, cfg.user_placement_radius);
        } while (dx * dx + dy * dy > cfg.user_placement_radius * cfg.user_placement_radius);
        const Vec3 pos(cfg.ris_position.x() + dx, cfg.ris_position.y() + dy, cfg.user_altitude);
        ch.user_positions[k] = pos;

        const double d_bu = (cfg.bs_position - pos).norm();
        const double d_ru = (cfg.ris_position - pos).norm();
        if (d_bu <= 0.0 || d_ru <= 0.0)
            throw InvalidInput("draw_channels: user coincides with BS or RIS");
        VecC g = VecC(Nr);
        for (int i = 0; i < Nr; ++i) g[i] = rng.complex_gaussian();
        ch.h_BU[k] = std::sqrt(path_loss(d_bu, cfg.alpha_bu, cfg.reference_pathloss_db)) * g;
        VecC r = VecC(M);
        for (int i = 0; i < M; ++i) r[i] = rng.complex_gaussian();
        ch.h_RU[k] = std::sqrt(path_loss(d_ru, cfg.alpha_ru, cfg.reference_pathloss_db)) * r;
    }
    return ch;
}

// ---------------------------------------------------------------------------
// Config file parsing
// ---------------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::vector<double> parse_double_list(const std::string& value) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw InvalidInput("empty element in list value");
        out.push_back(std::stod(item));
    }
    if (out.empty()) throw InvalidInput("empty list value");
    return out;
}

Vec3 parse_vec3(const std::string& value) {
    const auto v = parse_double_list(value);
    if (v.size() != 3) throw InvalidInput("expected 3 comma-separated values");
    return Vec3(v[0], v[1], v[2]);
}

}  // namespace

void apply_config_entry(ScenarioConfig& cfg, const std::string& raw_key, const std::string& raw_value) {
    const std::string key = trim(raw_key);
    const std::string value = trim(raw_value);
    try {
        if (key == "num_users") cfg.num_users = std::stoi(value);
        else if (key == "num_ris_elements") cfg.num_ris_elements = std::stoi(value);
        else if (key == "num_tx_antennas") cfg.num_tx_antennas = std::stoi(value);
        else if (key == "num_rx_antennas") cfg.num_rx_antennas = std::stoi(value);
        else if (key == "bs_position") cfg.bs_position = parse_vec3(value);
        else if (key == "ris_position") cfg.ris_position = parse_vec3(value);
        else if (key == "target_position") cfg.target_position = parse_vec3(value);
        else if (key == "user_placement_radius") cfg.user_placement_radius = std::stod(value);
        else if (key == "user_altitude") cfg.user_altitude = std::stod(value);
        else if (key == "p_bs_dbm") cfg.p_bs_dbm = std::stod(value);
        else if (key == "p_user_dbm") cfg.p_user_dbm = parse_double_list(value);
        else if (key == "noise_dbm") cfg.noise_dbm = std::stod(value);
        else if (key == "gamma_r_db") cfg.gamma_r_db = std::stod(value);
        else if (key == "sigma_target_sq") cfg.sigma_target_sq = std::stod(value);
        else if (key == "rician_si_db") cfg.rician_si_db = std::stod(value);
        else if (key == "rician_bs_ris_db") cfg.rician_bs_ris_db = std::stod(value);
        else if (key == "alpha_bu") cfg.alpha_bu = std::stod(value);
        else if (key == "alpha_br") cfg.alpha_br = std::stod(value);
        else if (key == "alpha_ru") cfg.alpha_ru = std::stod(value);
        else if (key == "alpha_bt") cfg.alpha_bt = std::stod(value);
        else if (key == "alpha_tb") cfg.alpha_tb = std::stod(value);
        else if (key == "rho_si_db") cfg.rho_si_db = std::stod(value);
        else if (key == "reference_pathloss_db") cfg.reference_pathloss_db = std::stod(value);
        else if (key == "seed") cfg.seed = std::stoull(value);
        else if (key == "qcqp_tol") cfg.qcqp_tol = std::stod(value);
        else if (key == "qcqp_max_iters") cfg.qcqp_max_iters = std::stoi(value);
        else if (key == "mm_tol") cfg.mm_tol = std::stod(value);
        else if (key == "mm_max_iters") cfg.mm_max_iters = std::stoi(value);
        else if (key == "inner_bcd_tol") cfg.inner_bcd_tol = std::stod(value);
        else if (key == "inner_bcd_move_tol") cfg.inner_bcd_move_tol = std::stod(value);
        else if (key == "inner_bcd_max_iters") cfg.inner_bcd_max_iters = std::stoi(value);
        else if (key == "pdd_outer_max_iters") cfg.pdd_outer_max_iters = std::stoi(value);
        else if (key == "pdd_tol_scale") cfg.pdd_tol_scale = std::stod(value);
        else if (key == "pdd_rho0") cfg.pdd_rho0 = std::stod(value);
        else if (key == "pdd_penalty_shrink") cfg.pdd_penalty_shrink = std::stod(value);
        else if (key == "pdd_eta0") cfg.pdd_eta0 = std::stod(value);
        else if (key == "pdd_eta_shrink") cfg.pdd_eta_shrink = std::stod(value);
        else if (key == "outer_tol") cfg.outer_tol = std::stod(value);
        else if (key == "outer_max_iters") cfg.outer_max_iters = std::stoi(value);
        else throw InvalidInput("unknown config key: " + key);
    } catch (const InvalidInput&) {
        throw;
    } catch (const std::invalid_argument&) {
        throw InvalidInput("bad value for config key '" + key + "': " + value);
    } catch (const std::out_of_range&) {
        throw InvalidInput("out-of-range value for config key '" + key + "': " + value);
    }
}

ScenarioConfig load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open config file: " + path.string());
    ScenarioConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidInput("config line " + std::to_string(lineno) + " is not 'key = value'");
        apply_config_entry(cfg, line.substr(0, eq), line.substr(eq + 1));
    }
    cfg.validate();
    return cfg;
}

}  // namespace fdisac
