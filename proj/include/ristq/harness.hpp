// SPDX-License-Identifier: Apache-2.0
//
// Config-driven Monte-Carlo sweeps over bit budget, subblocks, sensors or
// training length, producing one averaged NMSE row per (axis value, estimator).
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ristq/channel_model.hpp"

namespace ristq {

enum class SweepMode { cascaded, individual, both };
enum class SweepAxis { total_bits, per_adc_bits, subblocks, semi_passive, time_slots };

const char *to_string(SweepMode m);
const char *to_string(SweepAxis a); // CSV axis_name: total_bits, per_adc_bits, T, L_a, time_slots

struct SweepSpec {
    std::string scenario_id = "desk";
    ScenarioConfig scenario;
    SweepMode mode = SweepMode::cascaded;
    SweepAxis axis = SweepAxis::total_bits;
    std::vector<double> axis_values{16, 32, 64, 128};
    // Selection names: task_based, task_based_no_dither, no_quant, digital_only,
    // ls, individual_two_stage, cascaded_from_individual. Empty selects all.
    std::vector<std::string> estimators;
    std::size_t n_trials = 500;
    std::uint64_t base_seed = 1;

    // Values held fixed while another axis is swept.
    std::size_t n_subblocks = 4;        // T
    std::size_t slots_per_subblock = 0; // tau, 0 means K
    std::size_t n_semi_passive = 4;     // L_a
    double total_bits = 128.0;          // BS budget (cascaded nu_c or individual nu_g)
    double sensor_bits = 4.0;           // bits per semi-passive ADC
    double eta = 2.0;
    std::size_t g_cascaded = 0;   // 0 means M_RB * M_UR
    std::size_t g_individual = 0; // 0 means M_RB

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

struct ResultRow {
    std::string scenario_id;
    std::string estimator;
    std::string axis_name;
    double axis_value = 0.0;
    std::size_t trial_count = 0;
    double nmse_linear_mean = 0.0;
    double nmse_db = 0.0;
    double bits_total = 0.0;
    std::size_t bits_per_adc = 0;
    double wall_time_ms = 0.0;
};

/// Mean of per-trial ratios in linear scale, then 10 log10.
double mean_nmse_db(const std::vector<double> &per_trial);

/// Trials run in parallel (capped by RIS_TQ_THREADS). Results do not depend on
/// the thread count. Degenerate quantizer settings are reported in warnings.
std::vector<ResultRow> run_sweep(const SweepSpec &spec, std::vector<std::string> *warnings = nullptr);

/// Single-threaded reference with identical output.
std::vector<ResultRow> run_sweep_serial(const SweepSpec &spec,
                                        std::vector<std::string> *warnings = nullptr);

/// Thread count from RIS_TQ_THREADS, bounded by the available cores.
int harness_threads();

extern const char *const kCsvHeader;
void write_csv(std::ostream &os, const std::vector<ResultRow> &rows);
std::string to_csv(const std::vector<ResultRow> &rows);

struct ScenarioPreset {
    std::string name;
    std::string description;
    ScenarioConfig config;
};

const std::vector<ScenarioPreset> &scenario_presets();
ScenarioConfig scenario_preset(const std::string &name);

/// Parses a JSON sweep config. Syntax errors report line and column; schema
/// errors name the field. Unknown keys are rejected.
SweepSpec parse_sweep_spec(const std::string &json_text);
SweepSpec load_sweep_spec(const std::string &path);

} // namespace ristq
