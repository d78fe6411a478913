// SPDX-License-Identifier: Apache-2.0
//
// Uplink training: RIS reflection schedule, UE pilots, semi-passive sensor
// mask, the stacked measurement operators and noisy observations.
#pragma once

#include <cstddef>
#include <vector>

#include "ristq/channel_model.hpp"
#include "ristq/quantizer.hpp"

namespace ristq {

enum class Mode { cascaded, individual };

const char *to_string(Mode m);

struct PilotPlan {
    Mode mode = Mode::cascaded;
    std::size_t n_subblocks = 1;        // T
    std::size_t slots_per_subblock = 1; // tau
    ComplexMatrix s;                    // L x T, entries +-1
    ComplexMatrix x_c;                  // K x tau (cascaded)
    ComplexMatrix x_i;                  // K x T (individual)
    std::vector<std::uint8_t> mask;     // length L, 1 marks a semi-passive element
    std::size_t n_semi_passive = 0;     // L_a

    /// S with semi-passive rows zeroed: those elements sense instead of reflecting.
    ComplexMatrix effective_reflection() const;
};

/// Draws S, the pilots and the sensor mask. In individual mode tau is 1.
/// Pilot matrices are redrawn (at most 10 times) and S (at most 64 times) until they have full rank.
PilotPlan make_pilot_plan(const ScenarioConfig &cfg, Mode mode, std::size_t n_subblocks,
                          std::size_t slots_per_subblock, std::size_t n_semi_passive, Rng &rng);

/// S^T ⊗ X_C^T ⊗ I_N, size N T tau x N K L. Row index is t N tau + u N + n.
ComplexMatrix build_sbar(const PilotPlan &plan, const ScenarioConfig &cfg);

/// ((S ⊙ F X_I)^T ⊗ I_N), size N T x N L.
ComplexMatrix build_w_y(const PilotPlan &plan, const ComplexMatrix &f, const ScenarioConfig &cfg);

/// diag(vec(Omega 1_T^T)) (X_I^T ⊗ I_L), size L T x K L.
ComplexMatrix build_w_zhat(const PilotPlan &plan, const ScenarioConfig &cfg);

struct StackedObservation {
    ComplexVector y;
    ComplexMatrix op;
    ComplexVector noise;
};

/// y = op * (c or vec(G)) + n with n ~ CN(0, noise_bs I).
StackedObservation simulate_bs_rx(const PilotPlan &plan, const ChannelRealization &ch,
                                  const ScenarioConfig &cfg, Rng &rng);

struct RisObservation {
    ComplexVector z_raw; // vec(Omega_bar ⊙ (F X_I + N_R))
    ComplexVector z_hat; // W_zhat f + n_R with unmasked noise
    ComplexVector pi_z;  // quantized at sensor positions, zero elsewhere
};

RisObservation simulate_ris_rx(const PilotPlan &plan, const ChannelRealization &ch,
                               const ScenarioConfig &cfg, const QuantizerSpec &spec, Rng &rng);

} // namespace ristq
