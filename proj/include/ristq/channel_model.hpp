// SPDX-License-Identifier: Apache-2.0
//
// Geometric mmWave channel model for the RIS-aided uplink: RIS->BS channel G,
// UE->RIS channels F, the vectorized cascaded channel c = vec(F^T ⋄ G) and the
// analytic second moments used by the estimators.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ristq/matrix_ops.hpp"
#include "ristq/random.hpp"

namespace ristq {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

double distance(Point2 a, Point2 b);

struct ScenarioConfig {
    std::size_t n_bs_antennas = 8;
    std::size_t ris_rows = 4; // L_h, horizontal elements
    std::size_t ris_cols = 4; // L_v, vertical elements
    std::size_t n_ues = 2;
    std::size_t paths_rb = 2;
    std::vector<std::size_t> paths_ur{2, 2};
    double carrier_freq_hz = 24e9;
    Point2 bs_position{0.0, 0.0};
    Point2 ris_position{20.0, 10.0};
    Point2 ue_circle_center{40.0, 0.0};
    double ue_circle_radius = 5.0;
    double tx_power_dbm = 23.0;
    double bandwidth_hz = 80e6;
    double noise_density_dbm_hz = -174.0;
    double noise_figure_db = 7.0;
    double antenna_spacing = 0.5; // in wavelengths, shared by BS and RIS
    // Angles are drawn uniformly on (-half_range, half_range).
    double azimuth_half_range = 1.5707963267948966;
    double elevation_half_range = 1.5707963267948966;
    std::uint64_t rng_seed = 1;

    std::size_t n_ris() const { return ris_rows * ris_cols; }
    std::size_t total_ur_paths() const;
    double tx_power_mw() const;
    /// Throws ConfigError naming the offending field.
    void validate() const;
};

struct ChannelGeometry {
    std::vector<double> aoa_bs;      // phi_m, per RB path
    std::vector<double> aod_ris_azi; // per RB path
    std::vector<double> aod_ris_ele;
    std::vector<std::vector<double>> aoa_ris_azi; // [ue][path]
    std::vector<std::vector<double>> aoa_ris_ele;
};

struct LinkBudget {
    double sigma2_rb = 0.0;          // per-path gain variance, RIS->BS
    std::vector<double> sigma2_ur;   // per-path gain variance, UE k -> RIS
    double noise_bs = 0.0;           // sigma_B^2 [mW]
    double noise_ris = 0.0;          // sigma_R^2 [mW]
    double distance_rb = 0.0;        // [m]
    std::vector<double> distance_ur; // [m]
};

struct PathGains {
    ComplexVector alpha_rb;              // raw CN(0, sigma2_rb) draws
    std::vector<ComplexVector> alpha_ur; // raw per-UE draws
    ComplexVector alpha_rb_scaled;       // sqrt(N L / M_RB) alpha_rb
    ComplexVector alpha_ur_scaled;       // stacked sqrt(L / M_UR,k) alpha_ur,k
    double sigma2_rb_bar = 0.0;
    std::vector<double> sigma2_ur_bar;
};

struct SteeringMatrices {
    ComplexMatrix a_b_rb; // N x M_RB
    ComplexMatrix a_r_rb; // L x M_RB
    ComplexMatrix a_r_ur; // L x M_UR, UEs stacked column-wise
};

struct ChannelRealization {
    ChannelGeometry geometry;
    std::vector<Point2> ue_positions;
    LinkBudget link;
    PathGains gains;
    SteeringMatrices steering;
    ComplexMatrix g;        // N x L
    ComplexMatrix f;        // L x K
    ComplexMatrix w_c;      // NKL x (M_RB M_UR)
    RealVector sigma_alpha_c; // diagonal of the alpha_c second moment
    ComplexVector alpha_c;  // alpha_ur ⊗ alpha_rb (scaled)
    ComplexVector c;        // NKL
    ComplexMatrix sigma_c;  // W_c Sigma_alpha W_c^H
    ComplexMatrix sigma_f;  // block diagonal, KL x KL
    ComplexMatrix sigma_g;  // NL x NL
    ComplexMatrix w_f;      // KL x M_UR, sigma_f = W_f diag(sigma_alpha_f) W_f^H
    RealVector sigma_alpha_f;
    ComplexMatrix w_g;      // NL x M_RB, sigma_g = W_g diag(sigma_alpha_g) W_g^H
    RealVector sigma_alpha_g;

    ComplexMatrix cascaded() const; // F^T ⋄ G, NK x L
};

// Array responses. Entry i of the ULA vector is exp(j i omega) / sqrt(n).
ComplexVector steering_ula(std::size_t n, double spatial_freq);
ComplexVector steering_upa(std::size_t l_h, std::size_t l_v, double azimuth, double elevation,
                           double spacing_h, double spacing_v);

double path_loss_db(double distance_m);
double dbm_to_mw(double dbm);
double noise_power_dbm(const ScenarioConfig &cfg);

/// Per-path variances 10^(-PL/10) and noise powers for the given UE positions.
LinkBudget link_budget(const ScenarioConfig &cfg, std::span<const Point2> ue_positions);

std::vector<Point2> draw_ue_positions(const ScenarioConfig &cfg, Rng &rng);

/// Uniform angles with the RB/UR distinctness condition enforced by resampling.
ChannelGeometry draw_geometry(const ScenarioConfig &cfg, Rng &rng);

SteeringMatrices steering_matrices(const ChannelGeometry &geometry, const ScenarioConfig &cfg);

/// W_c = (A_R,UR^T ⋄ A_R,RB^H)^T ⋄ (blkdiag(1^T) ⊗ A_B,RB).
ComplexMatrix build_w_c(const ChannelGeometry &geometry, const ScenarioConfig &cfg);
ComplexMatrix build_w_c(const SteeringMatrices &steering, const ScenarioConfig &cfg);

PathGains draw_path_gains(const ScenarioConfig &cfg, const LinkBudget &link, Rng &rng);

/// Assembles G, F, c, W_c and all covariances from fixed geometry and gains.
ChannelRealization build_realization(const ScenarioConfig &cfg, ChannelGeometry geometry,
                                     std::vector<Point2> ue_positions, PathGains gains);

/// Draws UE positions, angles and gains, then assembles the realization.
ChannelRealization sample_channels(const ScenarioConfig &cfg, Rng &rng);

} // namespace ristq
