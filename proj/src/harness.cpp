// SPDX-License-Identifier: Apache-2.0
#include "ristq/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "ristq/baselines.hpp"
#include "ristq/error.hpp"
#include "ristq/estimators.hpp"
#include "ristq/pilot_protocol.hpp"

namespace ristq {

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

// Random streams derived from the per-trial seed.
enum Stream : std::uint64_t {
    kChannel = 0,
    kPilots = 1,
    kBsNoise = 2,
    kRisNoise = 3,
    kDitherTask = 10,
    kDitherNoDither = 11,
    kDitherStage2 = 12,
};

const std::vector<std::string> kCascadedEstimators{"task_based", "task_based_no_dither", "no_quant",
                                                   "digital_only", "ls"};

bool contains(const std::vector<std::string> &v, const std::string &s) {
    return std::find(v.begin(), v.end(), s) != v.end();
}

bool runs_cascaded(SweepMode m) { return m != SweepMode::individual; }
bool runs_individual(SweepMode m) { return m != SweepMode::cascaded; }

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::size_t floor_div_bits(double total, std::size_t g) {
    if (g == 0)
        return 0;
    return static_cast<std::size_t>(std::floor(total / (2.0 * static_cast<double>(g))));
}

// Everything about one (axis value) that does not depend on the trial.
struct Point {
    double axis_value = 0.0;
    std::size_t t = 1;
    std::size_t tau = 1;
    std::size_t l_a = 0;
    double bits = 0.0;        // cascaded nu_c or individual nu_g
    double sensor_bits = 0.0; // Stage-I bits per ADC
    bool cascaded = true;
};

struct Cell {
    std::size_t point = 0;
    std::string estimator;
    double bits_total = 0.0;
    std::size_t bits_per_adc = 0;
};

struct Plan {
    SweepSpec spec;
    std::size_t g_c = 0;
    std::size_t g_g = 0;
    std::vector<Point> points;
    std::vector<Cell> cells;
    std::map<std::pair<std::size_t, std::string>, std::size_t> index;
    std::vector<std::string> cascaded_rows;
    std::vector<std::string> individual_rows;
};

std::size_t to_count(double v, const char *field) {
    if (!(v >= 0.0) || std::floor(v) != v)
        throw ConfigError(std::string("axis_values: ") + field + " values must be nonnegative integers");
    return static_cast<std::size_t>(v);
}

Point make_point(const SweepSpec &s, double value, std::size_t g_c, bool cascaded) {
    const std::size_t k = s.scenario.n_ues;
    Point p;
    p.axis_value = value;
    p.cascaded = cascaded;
    p.t = s.n_subblocks;
    p.tau = cascaded ? (s.slots_per_subblock == 0 ? k : s.slots_per_subblock) : 1;
    p.l_a = s.n_semi_passive;
    p.bits = s.total_bits;
    p.sensor_bits = s.sensor_bits;
    switch (s.axis) {
    case SweepAxis::total_bits:
        p.bits = value;
        break;
    case SweepAxis::per_adc_bits:
        if (cascaded)
            p.bits = 2.0 * static_cast<double>(g_c) * value;
        else
            p.sensor_bits = value;
        break;
    case SweepAxis::subblocks:
        p.t = to_count(value, "T");
        break;
    case SweepAxis::semi_passive:
        p.l_a = to_count(value, "L_a");
        break;
    case SweepAxis::time_slots: {
        const std::size_t slots = to_count(value, "time_slots");
        if (slots % p.tau != 0)
            throw ConfigError("axis_values: time_slots must be a multiple of slots_per_subblock");
        p.t = slots / p.tau;
        break;
    }
    }
    if (p.t == 0)
        throw ConfigError("axis_values: T must be >= 1");
    return p;
}

Plan build_plan(const SweepSpec &spec) {
    spec.validate();
    Plan plan;
    plan.spec = spec;
    const auto &cfg = spec.scenario;
    plan.g_c = spec.g_cascaded ? spec.g_cascaded : cfg.paths_rb * cfg.total_ur_paths();
    plan.g_g = spec.g_individual ? spec.g_individual : cfg.paths_rb;
    const bool all = spec.estimators.empty();
    auto selected = [&](const std::string &n) { return all || contains(spec.estimators, n); };

    if (runs_cascaded(spec.mode))
        for (const auto &e : kCascadedEstimators)
            if (selected(e))
                plan.cascaded_rows.push_back(e);
    if (runs_individual(spec.mode)) {
        if (selected("individual_two_stage")) {
            plan.individual_rows.push_back("individual_two_stage_f");
            plan.individual_rows.push_back("individual_two_stage_g");
        }
        if (selected("no_quant")) {
            plan.individual_rows.push_back("no_quant_f");
            plan.individual_rows.push_back("no_quant_g");
        }
        if (selected("cascaded_from_individual"))
            plan.individual_rows.push_back("cascaded_from_individual");
    }
    if (plan.cascaded_rows.empty() && plan.individual_rows.empty())
        throw ConfigError("estimators: no estimator applies to the selected mode");

    const std::size_t n = cfg.n_bs_antennas;
    auto add_cell = [&](std::size_t pi, const std::string &name, double total, std::size_t g) {
        plan.index[{pi, name}] = plan.cells.size();
        plan.cells.push_back({pi, name, total, floor_div_bits(total, g)});
    };
    for (double v : spec.axis_values) {
        // Cascaded and individual points share the axis value but not tau.
        if (!plan.cascaded_rows.empty()) {
            const Point p = make_point(spec, v, plan.g_c, true);
            const std::size_t pi = plan.points.size();
            plan.points.push_back(p);
            for (const auto &e : plan.cascaded_rows) {
                if (e == "no_quant")
                    add_cell(pi, e, 0.0, 0);
                else if (e == "digital_only" || e == "ls")
                    add_cell(pi, e, p.bits, n * p.t * p.tau);
                else
                    add_cell(pi, e, p.bits, plan.g_c);
            }
        }
        if (!plan.individual_rows.empty()) {
            const Point p = make_point(spec, v, plan.g_c, false);
            if (p.l_a > cfg.n_ris())
                throw ConfigError("n_semi_passive: exceeds the number of RIS elements");
            const std::size_t pi = plan.points.size();
            plan.points.push_back(p);
            const double f_bits = 2.0 * static_cast<double>(p.l_a) * p.sensor_bits;
            for (const auto &e : plan.individual_rows) {
                if (e == "individual_two_stage_f")
                    add_cell(pi, e, f_bits, p.l_a);
                else if (e == "individual_two_stage_g")
                    add_cell(pi, e, p.bits, plan.g_g);
                else if (e == "cascaded_from_individual")
                    add_cell(pi, e, f_bits + p.bits, p.l_a + plan.g_g);
                else
                    add_cell(pi, e, 0.0, 0);
            }
        }
    }
    return plan;
}

struct TrialOutput {
    std::vector<double> nmse;
    std::vector<double> ms;
};

// Trial state shared by every cascaded point with the same (T, tau).
struct CascadedState {
    PilotPlan pilots;
    StackedObservation obs;
    LinearMmse lm;
    std::optional<TaskBasis> basis;
    std::optional<ComplexMatrix> ls_op;
};

// Trial state shared by every individual point with the same (T, L_a, Stage-I bits).
struct IndividualState {
    PilotPlan pilots;
    StackedObservation obs;
    ComplexMatrix w_zhat;
    RisObservation ris;
    EstimateReport f_rep;
    double ms_f = 0.0;
    std::optional<TaskBasis> basis;
};

using CascadedKey = std::pair<std::size_t, std::size_t>;
using IndividualKey = std::tuple<std::size_t, std::size_t, double>;

CascadedState make_cascaded_state(const Plan &plan, const Point &p, const ChannelRealization &ch,
                                  std::uint64_t seed) {
    const auto &cfg = plan.spec.scenario;
    Rng prng(derive_seed(seed, kPilots));
    PilotPlan pilots = make_pilot_plan(cfg, Mode::cascaded, p.t, p.tau, 0, prng);
    Rng nrng(derive_seed(seed, kBsNoise));
    StackedObservation obs = simulate_bs_rx(pilots, ch, cfg, nrng);
    LinearMmse lm = linear_mmse(obs.op, ch.w_c, ch.sigma_alpha_c, ch.link.noise_bs);
    return {std::move(pilots), std::move(obs), std::move(lm), std::nullopt, std::nullopt};
}

void run_cascaded_point(const Plan &plan, std::size_t pi, const ChannelRealization &ch,
                        const ComplexMatrix &truth, std::uint64_t seed, CascadedState &st,
                        TrialOutput &out) {
    const auto &spec = plan.spec;
    const auto &cfg = spec.scenario;
    const Point &p = plan.points[pi];
    const auto rows = static_cast<Eigen::Index>(cfg.n_bs_antennas * cfg.n_ues);
    const auto cols = static_cast<Eigen::Index>(cfg.n_ris());

    auto score = [&](const ComplexVector &c_hat) { return nmse(truth, unvec(c_hat, rows, cols)); };
    std::optional<DigitalOnlyResult> digital;
    for (const auto &name : plan.cascaded_rows) {
        const std::size_t ci = plan.index.at({pi, name});
        const auto t0 = Clock::now();
        double value = 1.0;
        if (name == "task_based" || name == "task_based_no_dither") {
            if (!st.basis)
                st.basis = prepare_task_basis(st.lm.gamma, st.lm.sigma_y);
            const bool dither = name == "task_based";
            const TaskQuantDesign d = design_task_quantizer(*st.basis, plan.g_c, p.bits, spec.eta, dither);
            Rng drng(derive_seed(seed, dither ? kDitherTask : kDitherNoDither));
            value = score(apply_task_quantizer(d, st.obs.y, drng));
        } else if (name == "no_quant") {
            value = score(mmse_no_quant(st.obs.y, st.lm.gamma));
        } else {
            if (!digital)
                digital = digital_only(st.obs.y, st.lm.gamma, st.lm.sigma_y, p.bits, spec.eta);
            if (name == "digital_only") {
                value = score(digital->estimate);
            } else {
                if (!st.ls_op)
                    st.ls_op = st.obs.op * ch.w_c;
                const LeastSquaresResult ls = least_squares(digital->quantized, *st.ls_op);
                value = score(ch.w_c * ls.x);
            }
        }
        out.nmse[ci] = value;
        out.ms[ci] += ms_since(t0);
    }
}

IndividualState make_individual_state(const Plan &plan, const Point &p, const ChannelRealization &ch,
                                      std::uint64_t seed) {
    const auto &spec = plan.spec;
    const auto &cfg = spec.scenario;
    const auto t0 = Clock::now();
    Rng prng(derive_seed(seed, kPilots));
    PilotPlan pilots = make_pilot_plan(cfg, Mode::individual, p.t, 1, p.l_a, prng);
    Rng nrng(derive_seed(seed, kBsNoise));
    StackedObservation obs = simulate_bs_rx(pilots, ch, cfg, nrng);
    ComplexMatrix w_zhat = build_w_zhat(pilots, cfg);
    const auto levels_f =
        static_cast<std::size_t>(std::max(1.0, std::floor(std::exp2(std::min(p.sensor_bits, 52.0)))));
    const TaskQuantDesign d1 = stage1_design(ch.w_f, ch.sigma_alpha_f, w_zhat, ch.link.noise_ris, levels_f, spec.eta);
    Rng rrng(derive_seed(seed, kRisNoise));
    RisObservation ris = simulate_ris_rx(pilots, ch, cfg, d1.spec, rrng);
    EstimateReport f_rep = stage1_estimate(ris.pi_z, d1, ch.f);
    const double ms_f = ms_since(t0);
    return {std::move(pilots), std::move(obs), std::move(w_zhat), std::move(ris), std::move(f_rep), ms_f,
            std::nullopt};
}

void run_individual_point(const Plan &plan, std::size_t pi, const ChannelRealization &ch,
                          const ComplexMatrix &truth_c, std::uint64_t seed, IndividualState &st,
                          TrialOutput &out) {
    const auto &spec = plan.spec;
    const auto &cfg = spec.scenario;
    const Point &p = plan.points[pi];
    const auto n = static_cast<Eigen::Index>(cfg.n_bs_antennas);
    const auto l = static_cast<Eigen::Index>(cfg.n_ris());
    const auto k = static_cast<Eigen::Index>(cfg.n_ues);

    auto cell = [&](const char *name) -> std::optional<std::size_t> {
        auto it = plan.index.find({pi, name});
        if (it == plan.index.end())
            return std::nullopt;
        return it->second;
    };
    const auto c_f = cell("individual_two_stage_f");
    const auto c_g = cell("individual_two_stage_g");
    const auto c_c = cell("cascaded_from_individual");
    const auto c_nf = cell("no_quant_f");
    const auto c_ng = cell("no_quant_g");

    if (c_f) {
        out.nmse[*c_f] = st.f_rep.nmse;
        out.ms[*c_f] += st.ms_f;
    }
    if (c_g || c_c) {
        const auto t_g = Clock::now();
        if (!st.basis) {
            const ComplexMatrix w_hat = build_w_y(st.pilots, st.f_rep.matrix, cfg);
            st.basis = stage2_basis(ch.w_g, ch.sigma_alpha_g, w_hat, ch.link.noise_bs);
        }
        const TaskQuantDesign d2 = design_task_quantizer(*st.basis, plan.g_g, p.bits, spec.eta);
        Rng drng(derive_seed(seed, kDitherStage2));
        const EstimateReport g_rep = stage2_estimate(st.obs.y, d2, ch.g, drng);
        const double ms_g = ms_since(t_g);
        if (c_g) {
            out.nmse[*c_g] = g_rep.nmse;
            out.ms[*c_g] += ms_g;
        }
        if (c_c) {
            const auto t_c = Clock::now();
            out.nmse[*c_c] = cascaded_from_individual(st.f_rep.matrix, g_rep.matrix, truth_c).nmse;
            out.ms[*c_c] += st.ms_f + ms_g + ms_since(t_c);
        }
    }
    if (c_nf) {
        const auto t0 = Clock::now();
        const ComplexMatrix gamma_f = linear_mmse(st.w_zhat, ch.w_f, ch.sigma_alpha_f, ch.link.noise_ris).gamma;
        out.nmse[*c_nf] = nmse(ch.f, unvec(mmse_no_quant(st.ris.z_hat, gamma_f), l, k));
        out.ms[*c_nf] += ms_since(t0);
    }
    if (c_ng) {
        const auto t0 = Clock::now();
        const ComplexMatrix gamma_g = linear_mmse(st.obs.op, ch.w_g, ch.sigma_alpha_g, ch.link.noise_bs).gamma;
        out.nmse[*c_ng] = nmse(ch.g, unvec(mmse_no_quant(st.obs.y, gamma_g), n, l));
        out.ms[*c_ng] += ms_since(t0);
    }
}

TrialOutput run_trial(const Plan &plan, std::size_t trial) {
    const std::uint64_t seed = plan.spec.base_seed + trial;
    TrialOutput out;
    out.nmse.assign(plan.cells.size(), 0.0);
    out.ms.assign(plan.cells.size(), 0.0);
    Rng crng(derive_seed(seed, kChannel));
    const ChannelRealization ch = sample_channels(plan.spec.scenario, crng);
    const ComplexMatrix truth = ch.cascaded();
    std::map<CascadedKey, CascadedState> cascaded;
    std::map<IndividualKey, IndividualState> individual;
    for (std::size_t pi = 0; pi < plan.points.size(); ++pi) {
        const Point &p = plan.points[pi];
        if (p.cascaded) {
            const CascadedKey key{p.t, p.tau};
            auto it = cascaded.find(key);
            if (it == cascaded.end())
                it = cascaded.emplace(key, make_cascaded_state(plan, p, ch, seed)).first;
            run_cascaded_point(plan, pi, ch, truth, seed, it->second, out);
        } else {
            const IndividualKey key{p.t, p.l_a, p.sensor_bits};
            auto it = individual.find(key);
            if (it == individual.end())
                it = individual.emplace(key, make_individual_state(plan, p, ch, seed)).first;
            run_individual_point(plan, pi, ch, truth, seed, it->second, out);
        }
    }
    return out;
}

std::vector<ResultRow> aggregate(const Plan &plan, const std::vector<TrialOutput> &trials) {
    const auto &spec = plan.spec;
    std::vector<ResultRow> rows;
    for (std::size_t ci = 0; ci < plan.cells.size(); ++ci) {
        const Cell &c = plan.cells[ci];
        std::vector<double> values;
        values.reserve(trials.size());
        double ms = 0.0;
        for (const auto &t : trials) {
            values.push_back(t.nmse[ci]);
            ms += t.ms[ci];
        }
        ResultRow r;
        r.scenario_id = spec.scenario_id;
        r.estimator = c.estimator;
        r.axis_name = to_string(spec.axis);
        r.axis_value = plan.points[c.point].axis_value;
        r.trial_count = trials.size();
        double sum = 0.0;
        for (double v : values)
            sum += v;
        r.nmse_linear_mean = sum / static_cast<double>(values.size());
        r.nmse_db = 10.0 * std::log10(r.nmse_linear_mean);
        r.bits_total = c.bits_total;
        r.bits_per_adc = c.bits_per_adc;
        r.wall_time_ms = ms;
        rows.push_back(std::move(r));
    }
    std::sort(rows.begin(), rows.end(), [](const ResultRow &a, const ResultRow &b) {
        return std::tie(a.scenario_id, a.estimator, a.axis_value) <
               std::tie(b.scenario_id, b.estimator, b.axis_value);
    });
    return rows;
}

void collect_warnings(const Plan &plan, std::vector<std::string> *warnings) {
    if (!warnings)
        return;
    const double eta = plan.spec.eta;
    std::set<std::string> seen;
    for (const auto &c : plan.cells) {
        if (c.bits_total == 0.0 && c.estimator.rfind("no_quant", 0) == 0)
            continue;
        const std::size_t levels = c.bits_per_adc >= 52 ? std::size_t{1} << 52
                                                        : std::size_t{1} << c.bits_per_adc;
        std::ostringstream msg;
        if (c.bits_per_adc == 0)
            msg << c.estimator << " at " << to_string(plan.spec.axis) << "="
                << plan.points[c.point].axis_value << ": fewer than 2 levels per ADC";
        else if (!kappa_feasible(eta, levels) && c.estimator != "digital_only" && c.estimator != "ls")
            msg << c.estimator << " at " << to_string(plan.spec.axis) << "="
                << plan.points[c.point].axis_value << ": kappa infeasible for eta=" << eta;
        if (!msg.str().empty() && seen.insert(msg.str()).second)
            warnings->push_back(msg.str());
    }
}

std::vector<ResultRow> run_impl(const SweepSpec &spec, bool parallel, std::vector<std::string> *warnings) {
    const Plan plan = build_plan(spec);
    collect_warnings(plan, warnings);
    const auto n = static_cast<long>(spec.n_trials);
    std::vector<TrialOutput> trials(spec.n_trials);
    std::exception_ptr failure;
#ifdef _OPENMP
    const int threads = parallel ? harness_threads() : 1;
#pragma omp parallel for schedule(dynamic) num_threads(threads)
#endif
    for (long i = 0; i < n; ++i) {
        try {
            trials[static_cast<std::size_t>(i)] = run_trial(plan, static_cast<std::size_t>(i));
        } catch (...) {
#ifdef _OPENMP
#pragma omp critical(ristq_sweep_failure)
#endif
            if (!failure)
                failure = std::current_exception();
        }
    }
    (void)parallel;
    if (failure)
        std::rethrow_exception(failure);
    return aggregate(plan, trials);
}

std::string format_g9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

// JSON helpers. Every accessor names the field in its error.
const json &require(const json &obj, const char *key) {
    if (!obj.contains(key))
        throw ConfigError(std::string("missing required field '") + key + "'");
    return obj.at(key);
}

template <class T> T get_as(const json &v, const std::string &field) {
    try {
        return v.get<T>();
    } catch (const json::exception &) {
        throw ConfigError("field '" + field + "': wrong type");
    }
}

std::size_t get_count(const json &v, const std::string &field) {
    if (!v.is_number_integer() && !v.is_number_unsigned())
        throw ConfigError("field '" + field + "': expected a nonnegative integer");
    const auto x = v.get<long long>();
    if (x < 0)
        throw ConfigError("field '" + field + "': expected a nonnegative integer");
    return static_cast<std::size_t>(x);
}

double get_number(const json &v, const std::string &field) {
    if (!v.is_number())
        throw ConfigError("field '" + field + "': expected a number");
    return v.get<double>();
}

Point2 get_point(const json &v, const std::string &field) {
    if (!v.is_array() || v.size() != 2)
        throw ConfigError("field '" + field + "': expected [x, y]");
    return {get_number(v[0], field + "[0]"), get_number(v[1], field + "[1]")};
}

void reject_unknown(const json &obj, const std::set<std::string> &known, const std::string &where) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!known.count(it.key()))
            throw ConfigError("unknown field '" + where + it.key() + "'");
}

ScenarioConfig parse_scenario(const json &v) {
    if (v.is_string())
        return scenario_preset(v.get<std::string>());
    if (!v.is_object())
        throw ConfigError("field 'scenario': expected a preset name or an object");
    static const std::set<std::string> known{
        "preset",         "n_bs_antennas",     "ris_rows",          "ris_cols",
        "n_ues",          "paths_rb",          "paths_ur",          "carrier_freq_hz",
        "bs_position",    "ris_position",      "ue_circle_center",  "ue_circle_radius",
        "tx_power_dbm",   "bandwidth_hz",      "noise_density_dbm_hz", "noise_figure_db",
        "antenna_spacing", "azimuth_half_range", "elevation_half_range", "rng_seed"};
    reject_unknown(v, known, "scenario.");
    ScenarioConfig c = v.contains("preset") ? scenario_preset(get_as<std::string>(v["preset"], "scenario.preset"))
                                            : scenario_preset("desk");
    auto count = [&](const char *k, std::size_t &dst) {
        if (v.contains(k))
            dst = get_count(v[k], std::string("scenario.") + k);
    };
    auto number = [&](const char *k, double &dst) {
        if (v.contains(k))
            dst = get_number(v[k], std::string("scenario.") + k);
    };
    auto point = [&](const char *k, Point2 &dst) {
        if (v.contains(k))
            dst = get_point(v[k], std::string("scenario.") + k);
    };
    count("n_bs_antennas", c.n_bs_antennas);
    count("ris_rows", c.ris_rows);
    count("ris_cols", c.ris_cols);
    const std::size_t old_k = c.n_ues;
    count("n_ues", c.n_ues);
    count("paths_rb", c.paths_rb);
    if (v.contains("paths_ur")) {
        const json &p = v["paths_ur"];
        if (p.is_array()) {
            c.paths_ur.clear();
            for (std::size_t i = 0; i < p.size(); ++i)
                c.paths_ur.push_back(get_count(p[i], "scenario.paths_ur[" + std::to_string(i) + "]"));
        } else {
            c.paths_ur.assign(c.n_ues, get_count(p, "scenario.paths_ur"));
        }
    } else if (c.n_ues != old_k) {
        const std::size_t m = c.paths_ur.empty() ? 1 : c.paths_ur.front();
        c.paths_ur.assign(c.n_ues, m);
    }
    number("carrier_freq_hz", c.carrier_freq_hz);
    point("bs_position", c.bs_position);
    point("ris_position", c.ris_position);
    point("ue_circle_center", c.ue_circle_center);
    number("ue_circle_radius", c.ue_circle_radius);
    number("tx_power_dbm", c.tx_power_dbm);
    number("bandwidth_hz", c.bandwidth_hz);
    number("noise_density_dbm_hz", c.noise_density_dbm_hz);
    number("noise_figure_db", c.noise_figure_db);
    number("antenna_spacing", c.antenna_spacing);
    number("azimuth_half_range", c.azimuth_half_range);
    number("elevation_half_range", c.elevation_half_range);
    if (v.contains("rng_seed"))
        c.rng_seed = get_count(v["rng_seed"], "scenario.rng_seed");
    c.validate();
    return c;
}

SweepMode parse_mode(const std::string &s) {
    if (s == "cascaded")
        return SweepMode::cascaded;
    if (s == "individual")
        return SweepMode::individual;
    if (s == "both")
        return SweepMode::both;
    throw ConfigError("field 'mode': expected cascaded, individual or both, got '" + s + "'");
}

SweepAxis parse_axis(const std::string &s) {
    for (auto a : {SweepAxis::total_bits, SweepAxis::per_adc_bits, SweepAxis::subblocks,
                   SweepAxis::semi_passive, SweepAxis::time_slots})
        if (s == to_string(a))
            return a;
    throw ConfigError("field 'sweep_axis': expected total_bits, per_adc_bits, T, L_a or time_slots, got '" +
                      s + "'");
}

} // namespace

const char *to_string(SweepMode m) {
    switch (m) {
    case SweepMode::cascaded:
        return "cascaded";
    case SweepMode::individual:
        return "individual";
    case SweepMode::both:
        return "both";
    }
    return "?";
}

const char *to_string(SweepAxis a) {
    switch (a) {
    case SweepAxis::total_bits:
        return "total_bits";
    case SweepAxis::per_adc_bits:
        return "per_adc_bits";
    case SweepAxis::subblocks:
        return "T";
    case SweepAxis::semi_passive:
        return "L_a";
    case SweepAxis::time_slots:
        return "time_slots";
    }
    return "?";
}

void SweepSpec::validate() const {
    scenario.validate();
    if (scenario_id.empty() || scenario_id.find_first_of(",\"\n") != std::string::npos)
        throw ConfigError("field 'scenario_id': must be non-empty without commas, quotes or newlines");
    if (axis_values.empty())
        throw ConfigError("field 'axis_values': must be non-empty");
    for (std::size_t i = 1; i < axis_values.size(); ++i)
        if (!(axis_values[i] > axis_values[i - 1]))
            throw ConfigError("field 'axis_values': must be strictly increasing");
    for (double v : axis_values)
        if (!std::isfinite(v) || v < 0.0)
            throw ConfigError("field 'axis_values': values must be finite and nonnegative");
    if (n_trials == 0)
        throw ConfigError("field 'n_trials': must be >= 1");
    if (!(eta > 0.0))
        throw ConfigError("field 'eta': must be > 0");
    if (n_subblocks == 0)
        throw ConfigError("field 'n_subblocks': must be >= 1");
    if (!(total_bits >= 0.0) || !(sensor_bits >= 0.0))
        throw ConfigError("fields 'total_bits' and 'sensor_bits' must be nonnegative");
    if (axis == SweepAxis::semi_passive && mode != SweepMode::individual)
        throw ConfigError("field 'sweep_axis': L_a sweeps require mode 'individual'");
    static const std::set<std::string> known{"task_based",     "task_based_no_dither",  "no_quant",
                                             "digital_only",   "ls", "individual_two_stage",
                                             "cascaded_from_individual"};
    for (const auto &e : estimators)
        if (!known.count(e))
            throw ConfigError("field 'estimators': unknown estimator '" + e + "'");
}

double mean_nmse_db(const std::vector<double> &per_trial) {
    if (per_trial.empty())
        throw Error("mean_nmse_db: no trials");
    double sum = 0.0;
    for (double v : per_trial)
        sum += v;
    return 10.0 * std::log10(sum / static_cast<double>(per_trial.size()));
}

int harness_threads() {
    int cores = 1;
#ifdef _OPENMP
    cores = omp_get_num_procs();
#endif
    if (const char *env = std::getenv("RIS_TQ_THREADS")) {
        char *end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v >= 1)
            return static_cast<int>(std::min<long>(v, cores));
    }
    return std::max(cores, 1);
}

std::vector<ResultRow> run_sweep(const SweepSpec &spec, std::vector<std::string> *warnings) {
    return run_impl(spec, true, warnings);
}

std::vector<ResultRow> run_sweep_serial(const SweepSpec &spec, std::vector<std::string> *warnings) {
    return run_impl(spec, false, warnings);
}

const char *const kCsvHeader = "scenario_id,estimator,axis_name,axis_value,trial_count,nmse_linear_mean,"
                               "nmse_db,bits_total,bits_per_adc,wall_time_ms";

void write_csv(std::ostream &os, const std::vector<ResultRow> &rows) {
    os << kCsvHeader << '\n';
    for (const auto &r : rows)
        os << r.scenario_id << ',' << r.estimator << ',' << r.axis_name << ',' << format_g9(r.axis_value)
           << ',' << r.trial_count << ',' << format_g9(r.nmse_linear_mean) << ',' << format_g9(r.nmse_db)
           << ',' << format_g9(r.bits_total) << ',' << r.bits_per_adc << ',' << format_g9(r.wall_time_ms)
           << '\n';
}

std::string to_csv(const std::vector<ResultRow> &rows) {
    std::ostringstream os;
    write_csv(os, rows);
    return os.str();
}

const std::vector<ScenarioPreset> &scenario_presets() {
    static const std::vector<ScenarioPreset> presets = [] {
        std::vector<ScenarioPreset> p;
        p.push_back({"desk", "N=8, L=4x4, K=2, M_RB=2, M_UR,k=2 (default test scale)", ScenarioConfig{}});

        ScenarioConfig full;
        full.n_bs_antennas = 16;
        full.ris_rows = 10;
        full.ris_cols = 10;
        full.n_ues = 3;
        full.paths_rb = 4;
        full.paths_ur = {4, 4, 4};
        p.push_back({"full", "N=16, L=10x10, K=3, M_RB=M_UR,k=4 (full scale, slow)", full});

        ScenarioConfig tiny;
        tiny.n_bs_antennas = 4;
        tiny.ris_rows = 2;
        tiny.ris_cols = 2;
        tiny.n_ues = 1;
        tiny.paths_rb = 1;
        tiny.paths_ur = {1};
        p.push_back({"tiny", "N=4, L=2x2, K=1, single paths (smoke tests)", tiny});
        return p;
    }();
    return presets;
}

ScenarioConfig scenario_preset(const std::string &name) {
    for (const auto &p : scenario_presets())
        if (p.name == name)
            return p.config;
    throw ConfigError("unknown scenario preset '" + name + "'");
}

SweepSpec parse_sweep_spec(const std::string &json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error &e) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < json_text.size(); ++i) {
            if (json_text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ConfigError("config parse error at line " + std::to_string(line) + ", column " +
                          std::to_string(col) + ": " + e.what());
    }
    if (!root.is_object())
        throw ConfigError("config: top level must be a JSON object");
    static const std::set<std::string> known{
        "scenario_id",  "scenario",           "mode",           "sweep_axis",  "axis_values",
        "estimators",   "n_trials",           "base_seed",      "n_subblocks", "slots_per_subblock",
        "n_semi_passive", "total_bits",       "sensor_bits",    "eta",         "g_cascaded",
        "g_individual"};
    reject_unknown(root, known, "");

    SweepSpec s;
    if (root.contains("scenario"))
        s.scenario = parse_scenario(root["scenario"]);
    s.scenario_id = root.contains("scenario_id") ? get_as<std::string>(root["scenario_id"], "scenario_id")
                    : root.contains("scenario") && root["scenario"].is_string()
                        ? root["scenario"].get<std::string>()
                        : std::string("custom");
    s.mode = parse_mode(get_as<std::string>(require(root, "mode"), "mode"));
    s.axis = parse_axis(get_as<std::string>(require(root, "sweep_axis"), "sweep_axis"));
    const json &values = require(root, "axis_values");
    if (!values.is_array())
        throw ConfigError("field 'axis_values': expected an array");
    s.axis_values.clear();
    for (std::size_t i = 0; i < values.size(); ++i)
        s.axis_values.push_back(get_number(values[i], "axis_values[" + std::to_string(i) + "]"));
    if (root.contains("estimators")) {
        const json &e = root["estimators"];
        if (!e.is_array())
            throw ConfigError("field 'estimators': expected an array of names");
        for (std::size_t i = 0; i < e.size(); ++i)
            s.estimators.push_back(get_as<std::string>(e[i], "estimators[" + std::to_string(i) + "]"));
    }
    if (root.contains("n_trials"))
        s.n_trials = get_count(root["n_trials"], "n_trials");
    if (root.contains("base_seed"))
        s.base_seed = get_count(root["base_seed"], "base_seed");
    if (root.contains("n_subblocks"))
        s.n_subblocks = get_count(root["n_subblocks"], "n_subblocks");
    if (root.contains("slots_per_subblock"))
        s.slots_per_subblock = get_count(root["slots_per_subblock"], "slots_per_subblock");
    if (root.contains("n_semi_passive"))
        s.n_semi_passive = get_count(root["n_semi_passive"], "n_semi_passive");
    if (root.contains("total_bits"))
        s.total_bits = get_number(root["total_bits"], "total_bits");
    if (root.contains("sensor_bits"))
        s.sensor_bits = get_number(root["sensor_bits"], "sensor_bits");
    if (root.contains("eta"))
        s.eta = get_number(root["eta"], "eta");
    if (root.contains("g_cascaded"))
        s.g_cascaded = get_count(root["g_cascaded"], "g_cascaded");
    if (root.contains("g_individual"))
        s.g_individual = get_count(root["g_individual"], "g_individual");
    s.validate();
    return s;
}

SweepSpec load_sweep_spec(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_sweep_spec(ss.str());
}

} // namespace ristq
