// SPDX-License-Identifier: Apache-2.0
#include "ristq/pilot_protocol.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ristq/error.hpp"

namespace ristq {

namespace {

constexpr int kMaxPilotDraws = 10;
constexpr int kMaxReflectionDraws = 64;

ComplexMatrix draw_pilots(std::size_t k, std::size_t cols, double power, Rng &rng) {
    const auto rows = static_cast<Eigen::Index>(k);
    const auto n = static_cast<Eigen::Index>(cols);
    const auto full = static_cast<std::size_t>(std::min(rows, n));
    ComplexMatrix x(rows, n);
    for (int attempt = 0; attempt < kMaxPilotDraws; ++attempt) {
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index i = 0; i < rows; ++i)
                x(i, j) = complex_normal(rng, power);
        if (numerical_rank(x) == full)
            return x;
    }
    throw SingularMatrixError("make_pilot_plan: could not draw a full-rank pilot matrix");
}

} // namespace

const char *to_string(Mode m) { return m == Mode::cascaded ? "cascaded" : "individual"; }

ComplexMatrix PilotPlan::effective_reflection() const {
    ComplexMatrix out = s;
    for (std::size_t l = 0; l < mask.size(); ++l)
        if (mask[l])
            out.row(static_cast<Eigen::Index>(l)).setZero();
    return out;
}

PilotPlan make_pilot_plan(const ScenarioConfig &cfg, Mode mode, std::size_t n_subblocks,
                          std::size_t slots_per_subblock, std::size_t n_semi_passive, Rng &rng) {
    cfg.validate();
    if (n_subblocks == 0)
        throw DimensionError("make_pilot_plan: need at least one subblock");
    const std::size_t l = cfg.n_ris();
    PilotPlan plan;
    plan.mode = mode;
    plan.n_subblocks = n_subblocks;
    if (mode == Mode::cascaded) {
        if (slots_per_subblock < cfg.n_ues)
            throw DimensionError("make_pilot_plan: cascaded mode needs tau >= K");
        if (n_semi_passive != 0)
            throw DimensionError("make_pilot_plan: cascaded mode has no semi-passive elements");
        plan.slots_per_subblock = slots_per_subblock;
    } else {
        if (n_semi_passive > l)
            throw DimensionError("make_pilot_plan: more semi-passive elements than RIS elements");
        plan.slots_per_subblock = 1;
    }

    plan.mask.assign(l, 0);
    plan.n_semi_passive = n_semi_passive;
    if (n_semi_passive > 0) {
        std::vector<std::size_t> idx(l);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::shuffle(idx.begin(), idx.end(), rng);
        for (std::size_t i = 0; i < n_semi_passive; ++i)
            plan.mask[idx[i]] = 1;
    }

    // S and its reflecting rows both get their maximum rank.
    const auto rows = static_cast<Eigen::Index>(l);
    const auto cols = static_cast<Eigen::Index>(n_subblocks);
    const auto reflecting = static_cast<Eigen::Index>(l - n_semi_passive);
    const auto s_full = static_cast<std::size_t>(std::min(rows, cols));
    const auto eff_full = static_cast<std::size_t>(std::min(reflecting, cols));
    plan.s.resize(rows, cols);
    std::bernoulli_distribution coin(0.5);
    for (int attempt = 0;; ++attempt) {
        for (Eigen::Index t = 0; t < cols; ++t)
            for (Eigen::Index r = 0; r < rows; ++r)
                plan.s(r, t) = coin(rng) ? 1.0 : -1.0;
        if (numerical_rank(plan.s) == s_full && numerical_rank(plan.effective_reflection()) == eff_full)
            break;
        if (attempt + 1 == kMaxReflectionDraws)
            throw SingularMatrixError("make_pilot_plan: could not draw a full-rank reflection matrix");
    }

    const double power = cfg.tx_power_mw();
    if (mode == Mode::cascaded) {
        plan.x_c = draw_pilots(cfg.n_ues, plan.slots_per_subblock, power, rng);
    } else {
        plan.x_i = draw_pilots(cfg.n_ues, n_subblocks, power, rng);
    }

    return plan;
}

ComplexMatrix build_sbar(const PilotPlan &plan, const ScenarioConfig &cfg) {
    if (plan.mode != Mode::cascaded)
        throw ModeMismatchError("build_sbar: plan is not in cascaded mode");
    const auto n = static_cast<Eigen::Index>(cfg.n_bs_antennas);
    const ComplexMatrix inner = kronecker(plan.x_c.transpose(), ComplexMatrix::Identity(n, n));
    return kronecker(plan.effective_reflection().transpose(), inner);
}

ComplexMatrix build_w_y(const PilotPlan &plan, const ComplexMatrix &f, const ScenarioConfig &cfg) {
    if (plan.mode != Mode::individual)
        throw ModeMismatchError("build_w_y: plan is not in individual mode");
    if (f.rows() != plan.s.rows() || f.cols() != plan.x_i.rows())
        throw DimensionError("build_w_y: F must be L x K");
    const auto n = static_cast<Eigen::Index>(cfg.n_bs_antennas);
    const ComplexMatrix xbar = hadamard(plan.effective_reflection(), f * plan.x_i);
    return kronecker(xbar.transpose(), ComplexMatrix::Identity(n, n));
}

ComplexMatrix build_w_zhat(const PilotPlan &plan, const ScenarioConfig &cfg) {
    if (plan.mode != Mode::individual)
        throw ModeMismatchError("build_w_zhat: plan is not in individual mode");
    const auto l = static_cast<Eigen::Index>(cfg.n_ris());
    if (plan.s.rows() != l)
        throw DimensionError("build_w_zhat: plan does not match scenario");
    ComplexMatrix w = kronecker(plan.x_i.transpose(), ComplexMatrix::Identity(l, l));
    for (Eigen::Index t = 0; t < plan.x_i.cols(); ++t)
        for (Eigen::Index e = 0; e < l; ++e)
            if (!plan.mask[static_cast<std::size_t>(e)])
                w.row(t * l + e).setZero();
    return w;
}

StackedObservation simulate_bs_rx(const PilotPlan &plan, const ChannelRealization &ch,
                                  const ScenarioConfig &cfg, Rng &rng) {
    StackedObservation obs;
    ComplexVector x;
    if (plan.mode == Mode::cascaded) {
        obs.op = build_sbar(plan, cfg);
        x = ch.c;
    } else {
        obs.op = build_w_y(plan, ch.f, cfg);
        x = vec(ch.g);
    }
    if (obs.op.cols() != x.size())
        throw DimensionError("simulate_bs_rx: plan and realization disagree");
    obs.noise = complex_normal_vector(rng, obs.op.rows(), ch.link.noise_bs);
    obs.y = obs.op * x + obs.noise;
    return obs;
}

RisObservation simulate_ris_rx(const PilotPlan &plan, const ChannelRealization &ch,
                               const ScenarioConfig &cfg, const QuantizerSpec &spec, Rng &rng) {
    const ComplexMatrix w = build_w_zhat(plan, cfg);
    const auto l = static_cast<Eigen::Index>(cfg.n_ris());
    const ComplexVector noise = complex_normal_vector(rng, w.rows(), ch.link.noise_ris);
    const ComplexVector clean = vec(ch.f * plan.x_i);

    RisObservation obs;
    obs.z_hat = w * vec(ch.f) + noise;
    obs.z_raw = clean + noise;
    for (Eigen::Index i = 0; i < obs.z_raw.size(); ++i)
        if (!plan.mask[static_cast<std::size_t>(i % l)])
            obs.z_raw(i) = 0.0;

    const QuantizedVector q = quantize_complex_vector(obs.z_raw, spec, rng);
    obs.pi_z = q.output;
    for (Eigen::Index i = 0; i < obs.pi_z.size(); ++i)
        if (!plan.mask[static_cast<std::size_t>(i % l)])
            obs.pi_z(i) = 0.0;
    return obs;
}

} // namespace ristq
