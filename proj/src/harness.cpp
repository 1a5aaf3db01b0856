#include "fdisac/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

namespace fdisac {

const char* to_string(Baseline b) {
    switch (b) {
        case Baseline::optimized_ris: return "optimized-ris";
        case Baseline::rnd_ris: return "rnd-ris";
        case Baseline::no_ris: return "no-ris";
        case Baseline::com_only: return "com-only";
    }
    return "?";
}

Baseline baseline_from_string(const std::string& name) {
    if (name == "optimized-ris") return Baseline::optimized_ris;
    if (name == "rnd-ris") return Baseline::rnd_ris;
    if (name == "no-ris") return Baseline::no_ris;
    if (name == "com-only") return Baseline::com_only;
    throw InvalidInput("unknown baseline: " + name);
}

const char* to_string(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::none: return "none";
        case SweepAxis::ris_elements: return "m";
        case SweepAxis::si_db: return "si";
    }
    return "?";
}

void ExperimentSpec::validate() const {
    base.validate();
    if (num_seeds < 1) throw InvalidInput("num_seeds must be >= 1");
    if (baselines.empty()) throw InvalidInput("at least one baseline required");
    if (sweep_axis == SweepAxis::none) {
        if (!sweep_values.empty()) throw InvalidInput("sweep values given without a sweep axis");
    } else {
        if (sweep_values.empty()) throw InvalidInput("sweep axis without values");
        for (std::size_t i = 1; i < sweep_values.size(); ++i)
            if (sweep_values[i] <= sweep_values[i - 1])
                throw InvalidInput("sweep values must be strictly increasing");
    }
}

namespace {

std::string format_g9(double v) {
    if (std::isnan(v)) return "na";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

double parse_or_nan(const std::string& s) {
    if (s == "na" || s.empty()) return std::numeric_limits<double>::quiet_NaN();
    return std::stod(s);
}

SweepAxis sweep_axis_from_string(const std::string& s) {
    if (s == "none") return SweepAxis::none;
    if (s == "m") return SweepAxis::ris_elements;
    if (s == "si") return SweepAxis::si_db;
    throw InvalidInput("unknown sweep axis: " + s);
}

struct Cell {
    Baseline baseline;
    double sweep_value;  // NaN if no sweep
    std::uint64_t seed;
};

ScenarioConfig cell_config(const ExperimentSpec& spec, const Cell& cell) {
    ScenarioConfig cfg = spec.base;
    if (spec.sweep_axis == SweepAxis::ris_elements)
        cfg.num_ris_elements = static_cast<int>(std::lround(cell.sweep_value));
    else if (spec.sweep_axis == SweepAxis::si_db)
        cfg.rho_si_db = cell.sweep_value;
    cfg.seed = cell.seed;
    return cfg;
}

RunMode baseline_mode(Baseline b) {
    switch (b) {
        case Baseline::optimized_ris: return RunMode{true, true, true};
        case Baseline::rnd_ris: return RunMode{false, true, true};
        case Baseline::no_ris: return RunMode{false, true, true};
        case Baseline::com_only: return RunMode{true, false, false};
    }
    return RunMode{};
}

std::string trace_stub(const ExperimentSpec& spec, const Cell& cell) {
    std::ostringstream name;
    name << "run_" << to_string(cell.baseline);
    if (spec.sweep_axis != SweepAxis::none)
        name << "_" << to_string(spec.sweep_axis) << format_g9(cell.sweep_value);
    name << "_seed" << cell.seed;
    return name.str();
}

ResultRecord run_cell(const ExperimentSpec& spec, const Cell& cell) {
    ResultRecord rec;
    rec.seed = cell.seed;
    rec.baseline = cell.baseline;
    rec.sweep_axis = spec.sweep_axis;
    rec.sweep_value = cell.sweep_value;
    rec.status = "ok";

    const auto t0 = std::chrono::steady_clock::now();
    try {
        const ScenarioConfig cfg = cell_config(spec, cell);
        ChannelSet channels = draw_channels(cfg, cell.seed);
        if (cell.baseline == Baseline::no_ris) {
            channels.G_r.setZero();
            for (auto& h : channels.h_RU) h.setZero();
        }
        OptimizerState state = initialize(channels, cfg, cell.seed, baseline_mode(cell.baseline));
        run(state);

        const IterationRecord& last = state.history.back();
        rec.sum_rate_nats = last.sum_rate_nats;
        rec.sum_rate_bits = last.sum_rate_nats / std::log(2.0);
        rec.radar_sinr_db = state.mode.radar
                                ? linear_to_db(last.radar_slack + cfg.gamma_r_linear())
                                : std::numeric_limits<double>::quiet_NaN();
        rec.outer_iterations = static_cast<int>(state.history.size()) - 1;

        if (spec.write_traces && !spec.output_dir.empty()) {
            const std::string stub = trace_stub(spec, cell);
            write_run_trace_csv(spec.output_dir / (stub + "_trace.csv"), state);
            if (!state.pdd_traces.empty())
                write_pdd_trace_csv(spec.output_dir / (stub + "_pdd.csv"), state);
        }
    } catch (const InfeasibleScenario&) {
        rec.status = "infeasible";
        rec.sum_rate_nats = rec.sum_rate_bits = rec.radar_sinr_db =
            std::numeric_limits<double>::quiet_NaN();
    } catch (const std::exception&) {
        rec.status = "error";
        rec.sum_rate_nats = rec.sum_rate_bits = rec.radar_sinr_db =
            std::numeric_limits<double>::quiet_NaN();
    }
    rec.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

}  // namespace

std::vector<ResultRecord> run_experiment(const ExperimentSpec& spec) {
    spec.validate();
    if (!spec.output_dir.empty()) std::filesystem::create_directories(spec.output_dir);

    std::vector<Cell> cells;
    const std::vector<double> sweep =
        (spec.sweep_axis == SweepAxis::none) ? std::vector<double>{std::nan("")} : spec.sweep_values;
    for (const Baseline b : spec.baselines)
        for (const double v : sweep)
            for (int i = 0; i < spec.num_seeds; ++i)
                cells.push_back(Cell{b, v, spec.base.seed + static_cast<std::uint64_t>(i)});

    std::vector<ResultRecord> records(cells.size());
    unsigned threads = spec.num_threads > 0 ? static_cast<unsigned>(spec.num_threads)
                                            : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(cells.size()));

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t idx = next.fetch_add(1);
            if (idx >= cells.size()) return;
            records[idx] = run_cell(spec, cells[idx]);
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    if (!spec.output_dir.empty()) {
        write_records_csv(spec.output_dir / "records.csv", records);
        write_summary_csv(spec.output_dir / "summary.csv", summarize(records));
    }
    return records;
}

std::vector<SummaryRow> summarize(const std::vector<ResultRecord>& records) {
    if (records.empty()) throw InvalidInput("summarize: no records");
    std::map<std::pair<int, double>, SummaryRow> cells;
    std::map<std::pair<int, double>, std::vector<double>> nats;

    for (const auto& rec : records) {
        const double key_value = std::isnan(rec.sweep_value) ? -1e300 : rec.sweep_value;
        const auto key = std::make_pair(static_cast<int>(rec.baseline), key_value);
        SummaryRow& row = cells[key];
        row.baseline = rec.baseline;
        row.sweep_axis = rec.sweep_axis;
        row.sweep_value = rec.sweep_value;
        if (rec.status == "ok") {
            nats[key].push_back(rec.sum_rate_nats);
            ++row.num_ok;
        } else if (rec.status == "infeasible") {
            ++row.num_infeasible;
        }
    }

    std::vector<SummaryRow> out;
    for (auto& [key, row] : cells) {
        const auto& xs = nats[key];
        if (xs.empty()) {
            row.mean_sum_rate_nats = row.stderr_sum_rate_nats =
                row.mean_sum_rate_bits = row.stderr_sum_rate_bits =
                    std::numeric_limits<double>::quiet_NaN();
        } else {
            double mean = 0.0;
            for (double x : xs) mean += x;
            mean /= double(xs.size());
            double var = 0.0;
            for (double x : xs) var += (x - mean) * (x - mean);
            const double se =
                xs.size() > 1 ? std::sqrt(var / double(xs.size() - 1) / double(xs.size())) : 0.0;
            row.mean_sum_rate_nats = mean;
            row.stderr_sum_rate_nats = se;
            row.mean_sum_rate_bits = mean / std::log(2.0);
            row.stderr_sum_rate_bits = se / std::log(2.0);
        }
        out.push_back(row);
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

void write_records_csv(const std::filesystem::path& path,
                       const std::vector<ResultRecord>& records) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot open for writing: " + path.string());
    out << "seed,baseline,sweep_axis,sweep_value,sum_rate_nats,sum_rate_bits,"
           "radar_sinr_db,outer_iterations,wall_time_seconds,status\n";
    for (const auto& r : records) {
        out << r.seed << ',' << to_string(r.baseline) << ',' << to_string(r.sweep_axis) << ','
            << format_g9(r.sweep_value) << ',' << format_g9(r.sum_rate_nats) << ','
            << format_g9(r.sum_rate_bits) << ',' << format_g9(r.radar_sinr_db) << ','
            << r.outer_iterations << ',' << format_g9(r.wall_time_seconds) << ',' << r.status
            << '\n';
    }
}

std::vector<ResultRecord> read_records_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open records csv: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw InvalidInput("empty records csv");
    std::vector<ResultRecord> records;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string item;
        while (std::getline(ss, item, ',')) fields.push_back(item);
        if (fields.size() != 10) throw InvalidInput("records csv: bad field count");
        ResultRecord r;
        r.seed = std::stoull(fields[0]);
        r.baseline = baseline_from_string(fields[1]);
        r.sweep_axis = sweep_axis_from_string(fields[2]);
        r.sweep_value = parse_or_nan(fields[3]);
        r.sum_rate_nats = parse_or_nan(fields[4]);
        r.sum_rate_bits = parse_or_nan(fields[5]);
        r.radar_sinr_db = parse_or_nan(fields[6]);
        r.outer_iterations = std::stoi(fields[7]);
        r.wall_time_seconds = parse_or_nan(fields[8]);
        r.status = fields[9];
        records.push_back(std::move(r));
    }
    return records;
}

void write_summary_csv(const std::filesystem::path& path, const std::vector<SummaryRow>& rows) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot open for writing: " + path.string());
    out << "baseline,sweep_axis,sweep_value,num_ok,num_infeasible,mean_sum_rate_nats,"
           "stderr_sum_rate_nats,mean_sum_rate_bits,stderr_sum_rate_bits\n";
    for (const auto& r : rows) {
        out << to_string(r.baseline) << ',' << to_string(r.sweep_axis) << ','
            << format_g9(r.sweep_value) << ',' << r.num_ok << ',' << r.num_infeasible << ','
            << format_g9(r.mean_sum_rate_nats) << ',' << format_g9(r.stderr_sum_rate_nats) << ','
            << format_g9(r.mean_sum_rate_bits) << ',' << format_g9(r.stderr_sum_rate_bits)
            << '\n';
    }
}

void write_run_trace_csv(const std::filesystem::path& path, const OptimizerState& state) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot open for writing: " + path.string());
    out << "iteration,sum_rate_nats,sum_rate_bits,radar_sinr_db,t_aux,t_beamformer,t_power,"
           "t_user_filters,t_radar_filter,t_phase\n";
    for (const auto& rec : state.history) {
        const double sinr_db = std::isnan(rec.radar_slack)
                                   ? std::numeric_limits<double>::quiet_NaN()
                                   : linear_to_db(rec.radar_slack + state.config.gamma_r_linear());
        out << rec.iteration << ',' << format_g9(rec.sum_rate_nats) << ','
            << format_g9(rec.sum_rate_nats / std::log(2.0)) << ',' << format_g9(sinr_db) << ','
            << format_g9(rec.t_aux) << ',' << format_g9(rec.t_beamformer) << ','
            << format_g9(rec.t_power) << ',' << format_g9(rec.t_user_filters) << ','
            << format_g9(rec.t_radar_filter) << ',' << format_g9(rec.t_phase) << '\n';
    }
}

void write_pdd_trace_csv(const std::filesystem::path& path, const OptimizerState& state) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot open for writing: " + path.string());
    out << "bca_iteration,outer_iter,phi_psi_inf,delta_phi_inf,al_value\n";
    for (std::size_t i = 0; i < state.pdd_traces.size(); ++i)
        for (const auto& row : state.pdd_traces[i])
            out << (i + 1) << ',' << row.outer_iter << ',' << format_g9(row.phi_psi_inf) << ','
                << format_g9(row.delta_phi_inf) << ',' << format_g9(row.al_value) << '\n';
}

}  // namespace fdisac
