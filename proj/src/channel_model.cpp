// SPDX-License-Identifier: Apache-2.0
#include "ristq/channel_model.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "ristq/error.hpp"

namespace ristq {

namespace {

constexpr double kAngleCollisionTol = 1e-9;
constexpr int kMaxAngleResamples = 1000;

} // namespace

double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

std::size_t ScenarioConfig::total_ur_paths() const {
    return std::accumulate(paths_ur.begin(), paths_ur.end(), std::size_t{0});
}

double ScenarioConfig::tx_power_mw() const { return dbm_to_mw(tx_power_dbm); }

void ScenarioConfig::validate() const {
    auto need = [](bool ok, const char *field, const char *why) {
        if (!ok)
            throw ConfigError(std::string("scenario.") + field + ": " + why);
    };
    need(n_bs_antennas >= 1, "n_bs_antennas", "must be >= 1");
    need(ris_rows >= 1, "ris_rows", "must be >= 1");
    need(ris_cols >= 1, "ris_cols", "must be >= 1");
    need(n_ues >= 1, "n_ues", "must be >= 1");
    need(paths_rb >= 1, "paths_rb", "must be >= 1");
    need(paths_ur.size() == n_ues, "paths_ur", "length must equal n_ues");
    for (auto m : paths_ur)
        need(m >= 1, "paths_ur", "every entry must be >= 1");
    need(carrier_freq_hz > 0.0, "carrier_freq_hz", "must be > 0");
    need(bandwidth_hz > 0.0, "bandwidth_hz", "must be > 0");
    need(ue_circle_radius >= 0.0, "ue_circle_radius", "must be >= 0");
    need(antenna_spacing > 0.0, "antenna_spacing", "must be > 0");
    need(azimuth_half_range > 0.0 && azimuth_half_range <= std::numbers::pi / 2,
         "azimuth_half_range", "must be in (0, pi/2]");
    need(elevation_half_range > 0.0 && elevation_half_range <= std::numbers::pi / 2,
         "elevation_half_range", "must be in (0, pi/2]");
}

ComplexMatrix ChannelRealization::cascaded() const { return khatri_rao(f.transpose(), g); }

ComplexVector steering_ula(std::size_t n, double spatial_freq) {
    ComplexVector a(static_cast<Eigen::Index>(n));
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i)
        a(static_cast<Eigen::Index>(i)) = std::polar(scale, static_cast<double>(i) * spatial_freq);
    return a;
}

ComplexVector steering_upa(std::size_t l_h, std::size_t l_v, double azimuth, double elevation,
                           double spacing_h, double spacing_v) {
    const double two_pi = 2.0 * std::numbers::pi;
    const double psi = two_pi * spacing_v * std::sin(elevation);
    const double varphi = two_pi * spacing_h * std::cos(elevation) * std::sin(azimuth);
    return kronecker(steering_ula(l_v, psi), steering_ula(l_h, varphi));
}

double path_loss_db(double distance_m) {
    if (!(distance_m > 0.0))
        throw ConfigError("path_loss_db: link distance must be positive");
    return 31.4 + 20.0 * std::log10(distance_m);
}

double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

double noise_power_dbm(const ScenarioConfig &cfg) {
    return cfg.noise_density_dbm_hz + 10.0 * std::log10(cfg.bandwidth_hz) + cfg.noise_figure_db;
}

LinkBudget link_budget(const ScenarioConfig &cfg, std::span<const Point2> ue_positions) {
    if (ue_positions.size() != cfg.n_ues)
        throw DimensionError("link_budget: need one position per UE");
    LinkBudget lb;
    lb.distance_rb = distance(cfg.bs_position, cfg.ris_position);
    lb.sigma2_rb = std::pow(10.0, -path_loss_db(lb.distance_rb) / 10.0);
    for (const auto &p : ue_positions) {
        const double r = distance(p, cfg.ris_position);
        lb.distance_ur.push_back(r);
        lb.sigma2_ur.push_back(std::pow(10.0, -path_loss_db(r) / 10.0));
    }
    lb.noise_bs = dbm_to_mw(noise_power_dbm(cfg));
    lb.noise_ris = lb.noise_bs;
    return lb;
}

std::vector<Point2> draw_ue_positions(const ScenarioConfig &cfg, Rng &rng) {
    std::vector<Point2> out;
    out.reserve(cfg.n_ues);
    for (std::size_t k = 0; k < cfg.n_ues; ++k) {
        const double phi = uniform(rng, 0.0, 2.0 * std::numbers::pi);
        out.push_back({cfg.ue_circle_center.x + cfg.ue_circle_radius * std::cos(phi),
                       cfg.ue_circle_center.y + cfg.ue_circle_radius * std::sin(phi)});
    }
    return out;
}

ChannelGeometry draw_geometry(const ScenarioConfig &cfg, Rng &rng) {
    cfg.validate();
    const double az = cfg.azimuth_half_range, el = cfg.elevation_half_range;
    auto draw = [&rng](double half) {
        // open interval: reject the endpoints
        double v;
        do {
            v = uniform(rng, -half, half);
        } while (v <= -half || v >= half);
        return v;
    };

    ChannelGeometry geo;
    for (std::size_t m = 0; m < cfg.paths_rb; ++m) {
        geo.aoa_bs.push_back(draw(az));
        geo.aod_ris_azi.push_back(draw(az));
        geo.aod_ris_ele.push_back(draw(el));
    }
    auto collides = [&](double azi, double ele) {
        for (std::size_t j = 0; j < cfg.paths_rb; ++j)
            if (std::abs(azi - geo.aod_ris_azi[j]) < kAngleCollisionTol ||
                std::abs(ele - geo.aod_ris_ele[j]) < kAngleCollisionTol)
                return true;
        return false;
    };
    geo.aoa_ris_azi.resize(cfg.n_ues);
    geo.aoa_ris_ele.resize(cfg.n_ues);
    for (std::size_t k = 0; k < cfg.n_ues; ++k) {
        for (std::size_t m = 0; m < cfg.paths_ur[k]; ++m) {
            double azi = draw(az), ele = draw(el);
            int tries = 0;
            while (collides(azi, ele)) {
                if (++tries > kMaxAngleResamples)
                    throw Error("draw_geometry: could not draw distinct angles");
                azi = draw(az);
                ele = draw(el);
            }
            geo.aoa_ris_azi[k].push_back(azi);
            geo.aoa_ris_ele[k].push_back(ele);
        }
    }
    return geo;
}

SteeringMatrices steering_matrices(const ChannelGeometry &geo, const ScenarioConfig &cfg) {
    const auto n = static_cast<Eigen::Index>(cfg.n_bs_antennas);
    const auto l = static_cast<Eigen::Index>(cfg.n_ris());
    const auto m_rb = static_cast<Eigen::Index>(cfg.paths_rb);
    const auto m_ur = static_cast<Eigen::Index>(cfg.total_ur_paths());
    if (geo.aoa_bs.size() != cfg.paths_rb || geo.aoa_ris_azi.size() != cfg.n_ues)
        throw DimensionError("steering_matrices: geometry does not match config");

    const double d = cfg.antenna_spacing;
    const double two_pi_d = 2.0 * std::numbers::pi * d;
    SteeringMatrices s;
    s.a_b_rb.resize(n, m_rb);
    s.a_r_rb.resize(l, m_rb);
    s.a_r_ur.resize(l, m_ur);
    for (Eigen::Index m = 0; m < m_rb; ++m) {
        s.a_b_rb.col(m) = steering_ula(cfg.n_bs_antennas, two_pi_d * std::sin(geo.aoa_bs[m]));
        s.a_r_rb.col(m) = steering_upa(cfg.ris_rows, cfg.ris_cols, geo.aod_ris_azi[m],
                                       geo.aod_ris_ele[m], d, d);
    }
    Eigen::Index col = 0;
    for (std::size_t k = 0; k < cfg.n_ues; ++k) {
        if (geo.aoa_ris_azi[k].size() != cfg.paths_ur[k])
            throw DimensionError("steering_matrices: UE path count does not match config");
        for (std::size_t m = 0; m < cfg.paths_ur[k]; ++m)
            s.a_r_ur.col(col++) = steering_upa(cfg.ris_rows, cfg.ris_cols, geo.aoa_ris_azi[k][m],
                                               geo.aoa_ris_ele[k][m], d, d);
    }
    return s;
}

ComplexMatrix build_w_c(const SteeringMatrices &s, const ScenarioConfig &cfg) {
    const auto k_ues = static_cast<Eigen::Index>(cfg.n_ues);
    const auto m_ur = static_cast<Eigen::Index>(cfg.total_ur_paths());
    // (A_R,UR^T ⋄ A_R,RB^H)^T : L x (M_UR M_RB), RB index fastest.
    const ComplexMatrix a_c = khatri_rao(s.a_r_ur.transpose(), s.a_r_rb.adjoint()).transpose();
    ComplexMatrix ones_blk = ComplexMatrix::Zero(k_ues, m_ur);
    Eigen::Index col = 0;
    for (Eigen::Index k = 0; k < k_ues; ++k)
        for (std::size_t m = 0; m < cfg.paths_ur[static_cast<std::size_t>(k)]; ++m)
            ones_blk(k, col++) = 1.0;
    const ComplexMatrix a_b_tilde = kronecker(ones_blk, s.a_b_rb);
    return khatri_rao(a_c, a_b_tilde);
}

ComplexMatrix build_w_c(const ChannelGeometry &geometry, const ScenarioConfig &cfg) {
    return build_w_c(steering_matrices(geometry, cfg), cfg);
}

PathGains draw_path_gains(const ScenarioConfig &cfg, const LinkBudget &link, Rng &rng) {
    const double n = static_cast<double>(cfg.n_bs_antennas);
    const double l = static_cast<double>(cfg.n_ris());
    PathGains pg;
    const auto m_rb = static_cast<Eigen::Index>(cfg.paths_rb);
    pg.alpha_rb = complex_normal_vector(rng, m_rb, link.sigma2_rb);
    const double scale_rb = n * l / static_cast<double>(cfg.paths_rb);
    pg.alpha_rb_scaled = std::sqrt(scale_rb) * pg.alpha_rb;
    pg.sigma2_rb_bar = scale_rb * link.sigma2_rb;

    pg.alpha_ur_scaled.resize(static_cast<Eigen::Index>(cfg.total_ur_paths()));
    Eigen::Index off = 0;
    for (std::size_t k = 0; k < cfg.n_ues; ++k) {
        const auto m = static_cast<Eigen::Index>(cfg.paths_ur[k]);
        pg.alpha_ur.push_back(complex_normal_vector(rng, m, link.sigma2_ur[k]));
        const double scale = l / static_cast<double>(cfg.paths_ur[k]);
        pg.alpha_ur_scaled.segment(off, m) = std::sqrt(scale) * pg.alpha_ur.back();
        pg.sigma2_ur_bar.push_back(scale * link.sigma2_ur[k]);
        off += m;
    }
    return pg;
}

ChannelRealization build_realization(const ScenarioConfig &cfg, ChannelGeometry geometry,
                                     std::vector<Point2> ue_positions, PathGains gains) {
    cfg.validate();
    ChannelRealization r;
    r.link = link_budget(cfg, ue_positions);
    r.geometry = std::move(geometry);
    r.ue_positions = std::move(ue_positions);
    r.gains = std::move(gains);
    r.steering = steering_matrices(r.geometry, cfg);
    const auto &s = r.steering;

    const auto l = static_cast<Eigen::Index>(cfg.n_ris());
    const auto k_ues = static_cast<Eigen::Index>(cfg.n_ues);

    r.g = s.a_b_rb * r.gains.alpha_rb_scaled.asDiagonal() * s.a_r_rb.adjoint();
    r.f.resize(l, k_ues);
    Eigen::Index off = 0;
    for (Eigen::Index k = 0; k < k_ues; ++k) {
        const auto m = static_cast<Eigen::Index>(cfg.paths_ur[static_cast<std::size_t>(k)]);
        r.f.col(k) = s.a_r_ur.middleCols(off, m) * r.gains.alpha_ur_scaled.segment(off, m);
        off += m;
    }

    r.w_c = build_w_c(s, cfg);
    r.alpha_c = kronecker(r.gains.alpha_ur_scaled, r.gains.alpha_rb_scaled);
    r.c = vec(r.cascaded());

    // Block-diagonal second moment of alpha_c: sigma_rb_bar^2 sigma_ur,k_bar^2.
    r.sigma_alpha_c.resize(r.w_c.cols());
    Eigen::Index idx = 0;
    for (std::size_t k = 0; k < cfg.n_ues; ++k)
        for (std::size_t m = 0; m < cfg.paths_ur[k] * cfg.paths_rb; ++m)
            r.sigma_alpha_c(idx++) = r.gains.sigma2_rb_bar * r.gains.sigma2_ur_bar[k];
    r.sigma_c = r.w_c * r.sigma_alpha_c.cast<cplx>().asDiagonal() * r.w_c.adjoint();

    const auto m_ur = static_cast<Eigen::Index>(cfg.total_ur_paths());
    r.w_f = ComplexMatrix::Zero(k_ues * l, m_ur);
    r.sigma_alpha_f.resize(m_ur);
    off = 0;
    for (Eigen::Index k = 0; k < k_ues; ++k) {
        const auto m = static_cast<Eigen::Index>(cfg.paths_ur[static_cast<std::size_t>(k)]);
        r.w_f.block(k * l, off, l, m) = s.a_r_ur.middleCols(off, m);
        r.sigma_alpha_f.segment(off, m).setConstant(r.gains.sigma2_ur_bar[static_cast<std::size_t>(k)]);
        off += m;
    }
    r.sigma_f = r.w_f * r.sigma_alpha_f.cast<cplx>().asDiagonal() * r.w_f.adjoint();

    r.w_g = khatri_rao(s.a_r_rb.conjugate(), s.a_b_rb);
    r.sigma_alpha_g = RealVector::Constant(r.w_g.cols(), r.gains.sigma2_rb_bar);
    r.sigma_g = r.gains.sigma2_rb_bar * (r.w_g * r.w_g.adjoint());
    return r;
}

ChannelRealization sample_channels(const ScenarioConfig &cfg, Rng &rng) {
    cfg.validate();
    auto positions = draw_ue_positions(cfg, rng);
    auto geometry = draw_geometry(cfg, rng);
    const auto link = link_budget(cfg, positions);
    auto gains = draw_path_gains(cfg, link, rng);
    return build_realization(cfg, std::move(geometry), std::move(positions), std::move(gains));
}

} // namespace ristq
