// SPDX-License-Identifier: Apache-2.0
//
// Randomized rank checks for the cascaded and individual MMSE matrices.
// Each draw picks a small random configuration, evaluates the rank condition
// and the numerical rank, and tallies the two directions separately.
#pragma once

#include <algorithm>
#include <cstddef>
#include <string>

#include "ristq/channel_model.hpp"
#include "ristq/estimators.hpp"
#include "ristq/pilot_protocol.hpp"

namespace ristq::testing {

enum class RankCase { w_c, gamma_c, gamma_f, gamma_g };

struct RankTally {
    std::size_t cond_true = 0;
    std::size_t cond_true_full = 0;  // sufficiency attained
    std::size_t cond_false = 0;
    std::size_t cond_false_full = 0; // necessity violated
    double attainment() const {
        return cond_true == 0 ? 0.0 : static_cast<double>(cond_true_full) / static_cast<double>(cond_true);
    }
};

inline std::size_t pick(Rng &rng, std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(rng() % (hi - lo + 1));
}

inline const char *to_string(RankCase c) {
    switch (c) {
    case RankCase::w_c:
        return "W_c";
    case RankCase::gamma_c:
        return "Gamma_c";
    case RankCase::gamma_f:
        return "Gamma_f";
    case RankCase::gamma_g:
        return "Gamma_g|f";
    }
    return "?";
}

// One random draw. Returns {condition holds, full rank observed}.
inline std::pair<bool, bool> rank_draw(RankCase which, Rng &rng) {
    ScenarioConfig cfg;
    cfg.n_ues = pick(rng, 1, 3);
    cfg.paths_rb = pick(rng, 1, 3);
    const std::size_t m_ur_k = pick(rng, 1, 3);
    cfg.paths_ur.assign(cfg.n_ues, m_ur_k);
    const std::size_t m_ur = cfg.total_ur_paths();
    cfg.n_bs_antennas = pick(rng, 1, 4);
    const std::size_t t = pick(rng, 1, 5);

    switch (which) {
    case RankCase::w_c: {
        // Single antenna and UE so the element count alone bounds the rank.
        cfg.ris_rows = pick(rng, 1, 6);
        cfg.ris_cols = pick(rng, 1, 6);
        cfg.n_bs_antennas = 1;
        cfg.n_ues = 1;
        cfg.paths_ur.assign(1, m_ur_k);
        const std::size_t full = cfg.paths_rb * m_ur_k;
        const ComplexMatrix w = build_w_c(draw_geometry(cfg, rng), cfg);
        return {cfg.n_ris() >= full, numerical_rank(w) == full};
    }
    case RankCase::gamma_c: {
        // L large enough that W_c has full column rank.
        const std::size_t full = cfg.paths_rb * m_ur;
        const auto side = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(full))));
        cfg.ris_rows = side + pick(rng, 0, 1);
        cfg.ris_cols = side + pick(rng, 0, 1);
        const ChannelRealization ch = sample_channels(cfg, rng);
        const std::size_t tau = cfg.n_ues;
        const PilotPlan plan = make_pilot_plan(cfg, Mode::cascaded, t, tau, 0, rng);
        const LinearMmse lm = linear_mmse(build_sbar(plan, cfg), ch.w_c, ch.sigma_alpha_c, ch.link.noise_bs);
        const bool cond = cfg.n_bs_antennas * t * tau >= full && cfg.n_ues * t >= m_ur;
        return {cond, numerical_rank(lm.gamma) == full};
    }
    case RankCase::gamma_f: {
        cfg.ris_rows = pick(rng, 2, 4);
        cfg.ris_cols = pick(rng, 2, 4);
        // Every sensor subset can resolve one UE's paths.
        const std::size_t l_a = pick(rng, m_ur_k, std::min<std::size_t>(cfg.n_ris() - 1, 6));
        const ChannelRealization ch = sample_channels(cfg, rng);
        const PilotPlan plan = make_pilot_plan(cfg, Mode::individual, t, 1, l_a, rng);
        const ComplexMatrix gamma = linear_mmse(build_w_zhat(plan, cfg), ch.w_f, ch.sigma_alpha_f, ch.link.noise_ris).gamma;
        return {l_a * t >= m_ur, numerical_rank(gamma) == m_ur};
    }
    case RankCase::gamma_g: {
        cfg.ris_rows = pick(rng, 2, 4);
        cfg.ris_cols = pick(rng, 2, 4);
        // Enough reflecting elements remain to carry every RB path.
        const std::size_t l_a = pick(rng, 0, std::min(cfg.n_ris() / 2, cfg.n_ris() - cfg.paths_rb));
        const std::size_t t_g = pick(rng, 1, 3);
        const ChannelRealization ch = sample_channels(cfg, rng);
        const PilotPlan plan = make_pilot_plan(cfg, Mode::individual, t_g, 1, l_a, rng);
        const ComplexMatrix gamma = linear_mmse(build_w_y(plan, ch.f, cfg), ch.w_g, ch.sigma_alpha_g, ch.link.noise_bs).gamma;
        return {cfg.n_bs_antennas * t_g >= cfg.paths_rb, numerical_rank(gamma) == cfg.paths_rb};
    }
    }
    return {false, false};
}

// Draws until both directions have at least min_each samples (or max_draws).
inline RankTally run_rank_suite(RankCase which, std::size_t min_each, std::uint64_t seed,
                                std::size_t max_draws = 20000) {
    Rng rng(seed);
    RankTally tally;
    for (std::size_t i = 0; i < max_draws; ++i) {
        if (tally.cond_true >= min_each && tally.cond_false >= min_each)
            break;
        const auto [cond, full] = rank_draw(which, rng);
        if (cond) {
            if (tally.cond_true >= min_each)
                continue;
            ++tally.cond_true;
            tally.cond_true_full += full ? 1 : 0;
        } else {
            if (tally.cond_false >= min_each)
                continue;
            ++tally.cond_false;
            tally.cond_false_full += full ? 1 : 0;
        }
    }
    return tally;
}

} // namespace ristq::testing
