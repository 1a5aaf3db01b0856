#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fdisac/optimizer.hpp"

namespace fdisac {

enum class Baseline { optimized_ris, rnd_ris, no_ris, com_only };

const char* to_string(Baseline b);
Baseline baseline_from_string(const std::string& name);

enum class SweepAxis { none, ris_elements, si_db };

const char* to_string(SweepAxis axis);

/// One Monte-Carlo batch: a base config, an optional sweep axis, the set of
/// baselines to run, and the seed count.
struct ExperimentSpec {
    ScenarioConfig base;
    SweepAxis sweep_axis = SweepAxis::none;
    std::vector<double> sweep_values;  ///< nonempty and strictly increasing when sweeping
    std::vector<Baseline> baselines{Baseline::optimized_ris};
    int num_seeds = 1;
    std::filesystem::path output_dir;  ///< empty: keep results in memory only
    bool write_traces = false;
    int num_threads = 0;  ///< 0 = hardware concurrency

    void validate() const;
};

struct ResultRecord {
    std::uint64_t seed = 0;
    Baseline baseline = Baseline::optimized_ris;
    SweepAxis sweep_axis = SweepAxis::none;
    double sweep_value = 0.0;  ///< NaN when there is no sweep
    double sum_rate_nats = 0.0;
    double sum_rate_bits = 0.0;
    double radar_sinr_db = 0.0;  ///< NaN for com-only
    int outer_iterations = 0;
    double wall_time_seconds = 0.0;
    std::string status;  ///< "ok" | "infeasible" | "error"
};

/// Runs every (seed x sweep value x baseline) cell in a work pool and merges
/// results in task order (deterministic regardless of thread count).
std::vector<ResultRecord> run_experiment(const ExperimentSpec& spec);

struct SummaryRow {
    Baseline baseline = Baseline::optimized_ris;
    SweepAxis sweep_axis = SweepAxis::none;
    double sweep_value = 0.0;
    int num_ok = 0;
    int num_infeasible = 0;
    double mean_sum_rate_nats = 0.0;   ///< NaN for an empty cell
    double stderr_sum_rate_nats = 0.0;
    double mean_sum_rate_bits = 0.0;
    double stderr_sum_rate_bits = 0.0;
};

/// Per-cell means and standard errors; infeasible records are counted but
/// excluded from the averages.
std::vector<SummaryRow> summarize(const std::vector<ResultRecord>& records);

void write_records_csv(const std::filesystem::path& path,
                       const std::vector<ResultRecord>& records);
std::vector<ResultRecord> read_records_csv(const std::filesystem::path& path);
void write_summary_csv(const std::filesystem::path& path, const std::vector<SummaryRow>& rows);

/// Per-iteration trace of one optimizer run.
void write_run_trace_csv(const std::filesystem::path& path, const OptimizerState& state);
/// Concatenated phase-block traces of one run, tagged by outer iteration.
void write_pdd_trace_csv(const std::filesystem::path& path, const OptimizerState& state);

}  // namespace fdisac
