// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <vector>

#include "rank_suite.hpp"
#include "ristq/channel_model.hpp"
#include "ristq/error.hpp"
#include "ristq/estimators.hpp"
#include "ristq/pilot_protocol.hpp"
#include "test_util.hpp"

using namespace ristq;
using ristq::testing::approx;
using ristq::testing::random_hpd;
using ristq::testing::random_matrix;
using ristq::testing::rel;

namespace {

// Desk scenario in cascaded mode with T = 4 subblocks of tau = 2 slots.
struct Desk {
    ScenarioConfig cfg;
    ChannelRealization ch;
    PilotPlan plan;
    ComplexMatrix op;
    LinearMmse lm;
};

Desk make_desk(std::uint64_t seed) {
    Desk d;
    Rng rng(seed);
    d.ch = sample_channels(d.cfg, rng);
    d.plan = make_pilot_plan(d.cfg, Mode::cascaded, 4, 2, 0, rng);
    d.op = build_sbar(d.plan, d.cfg);
    d.lm = linear_mmse(d.op, d.ch.w_c, d.ch.sigma_alpha_c, d.ch.link.noise_bs);
    return d;
}

// Fresh gains on the fixed geometry of d.
ComplexVector draw_c(const Desk &d, Rng &rng) {
    const PathGains pg = draw_path_gains(d.cfg, d.ch.link, rng);
    return d.ch.w_c * kronecker(pg.alpha_ur_scaled, pg.alpha_rb_scaled);
}

ComplexVector observe(const Desk &d, const ComplexVector &c, Rng &rng) {
    return d.op * c + complex_normal_vector(rng, d.op.rows(), d.ch.link.noise_bs);
}

double bits_for_levels(std::size_t g, double levels) { return 2.0 * static_cast<double>(g) * std::log2(levels); }

constexpr std::size_t kGc = 8; // M_RB * M_UR at desk scale

} // namespace

TEST_CASE("nmse of exact, zero and mismatched estimates") {
    Rng rng(1);
    const ComplexMatrix t = random_matrix(rng, 4, 3);
    CHECK(nmse(t, t) == 0.0);
    CHECK(nmse(t, ComplexMatrix::Zero(4, 3)) == approx(1.0));
    CHECK(nmse(t, 0.5 * t) == approx(0.25));
    CHECK_THROWS_AS(nmse(t, ComplexMatrix::Zero(3, 4)), DimensionError);
    CHECK_THROWS_AS(nmse(ComplexMatrix::Zero(2, 2), t.topLeftCorner(2, 2)), Error);
}

TEST_CASE("scalar MMSE matrix is the Wiener gain") {
    for (double s2 : {0.1, 1.0, 7.5})
        for (double n : {0.01, 1.0, 4.0}) {
            const ComplexMatrix g = mmse_matrix_cascaded(ComplexMatrix::Constant(1, 1, s2),
                                                         ComplexMatrix::Identity(1, 1), n);
            CHECK(g(0, 0).real() == approx(s2 / (s2 + n)).epsilon(1e-12));
            CHECK(g(0, 0).imag() == 0.0);
        }
}

TEST_CASE("scalar MMSE matrix tends to one at high SNR") {
    const ComplexMatrix g =
        mmse_matrix(ComplexMatrix::Constant(1, 1, 1e8), ComplexMatrix::Identity(1, 1), 1.0);
    CHECK(std::abs(g(0, 0) - cplx(1.0)) < 1e-7);
}

TEST_CASE("MMSE matrix rejects bad noise and shapes") {
    const ComplexMatrix s = ComplexMatrix::Identity(3, 3);
    CHECK_THROWS_AS(mmse_matrix(s, ComplexMatrix::Identity(3, 3), 0.0), ConfigError);
    CHECK_THROWS_AS(mmse_matrix(s, ComplexMatrix::Identity(2, 2), 1.0), DimensionError);
    CHECK_THROWS_AS(mmse_matrix(ComplexMatrix::Identity(3, 2), ComplexMatrix::Identity(3, 3), 1.0),
                    DimensionError);
    CHECK_THROWS_AS(linear_mmse(ComplexMatrix::Identity(2, 3), ComplexMatrix::Identity(3, 2),
                                RealVector::Ones(3), 1.0),
                    DimensionError);
}

TEST_CASE("factored and full covariance give the same linear MMSE") {
    Rng rng(2);
    const ComplexMatrix basis = random_matrix(rng, 12, 4);
    const RealVector w = (RealVector(4) << 0.5, 1.0, 2.0, 3.0).finished();
    const ComplexMatrix sigma = basis * w.cast<cplx>().asDiagonal() * basis.adjoint();
    const ComplexMatrix op = random_matrix(rng, 7, 12);
    const LinearMmse a = linear_mmse(op, basis, w, 0.3);
    const LinearMmse b = linear_mmse(op, sigma, 0.3);
    CHECK(rel(a.gamma, b.gamma) < 1e-10);
    CHECK(rel(a.sigma_y, b.sigma_y) < 1e-12);
    CHECK(a.prior_energy == approx(b.prior_energy).epsilon(1e-12));
    CHECK(a.mmse == approx(b.mmse).epsilon(1e-9));
    CHECK(a.mmse == approx(sigma.trace().real() - (b.gamma * op * sigma).trace().real())
                        .epsilon(1e-9));
}

TEST_CASE("Monte-Carlo MSE of the cascaded MMSE estimate matches the closed form") {
    const Desk d = make_desk(11);
    const double predicted =
        d.ch.sigma_c.trace().real() - (d.lm.gamma * d.op * d.ch.sigma_c).trace().real();
    CHECK(predicted == approx(d.lm.mmse).epsilon(1e-9));
    Rng rng(12);
    const int trials = 10000;
    double acc = 0.0;
    for (int i = 0; i < trials; ++i) {
        const ComplexVector c = draw_c(d, rng);
        acc += (c - d.lm.gamma * observe(d, c, rng)).squaredNorm();
    }
    CHECK(acc / trials == approx(predicted).epsilon(0.03));
}

TEST_CASE("task quantizer design shapes and normalization") {
    const Desk d = make_desk(13);
    const TaskQuantDesign q = design_task_quantizer(d.lm.gamma, d.lm.sigma_y, kGc, 48.0, 2.0);
    CHECK(q.b.rows() == static_cast<Eigen::Index>(kGc));
    CHECK(q.b.cols() == d.lm.sigma_y.rows());
    CHECK(q.d.cols() == static_cast<Eigen::Index>(kGc));
    CHECK(q.d.rows() == d.lm.gamma.rows());
    CHECK(q.n_branches() == kGc);
    CHECK(q.spec.levels == 8);
    CHECK(q.kappa == approx(kappa(2.0, 8)));
    CHECK(q.spec.support == approx(std::sqrt(q.kappa / kGc)));
    CHECK_FALSE(q.degenerate);

    const ComplexMatrix h = q.b * d.lm.sigma_y * q.b.adjoint();
    const double mean = h.diagonal().real().mean();
    CHECK(h.trace().real() == approx(1.0).epsilon(1e-9));
    for (Eigen::Index g = 0; g < h.rows(); ++g) {
        CHECK(std::abs(h(g, g).real() - mean) <= 1e-8 * mean);
        CHECK(std::abs(h(g, g).imag()) <= 1e-8 * mean);
    }
    CHECK(mean == approx(q.spec.support * q.spec.support / q.kappa).epsilon(1e-8));

    const ComplexMatrix d_oracle = d.lm.gamma * d.lm.sigma_y * q.b.adjoint() *
                                   (h + q.spec.noise_power() * ComplexMatrix::Identity(kGc, kGc)).inverse();
    CHECK(rel(q.d, d_oracle) < 1e-8);
}

TEST_CASE("task quantizer design rejects bad branch counts") {
    Rng rng(3);
    const ComplexMatrix s = random_hpd(rng, 5);
    const ComplexMatrix g = random_matrix(rng, 3, 5);
    CHECK_THROWS_AS(design_task_quantizer(g, s, 0, 20.0, 2.0), DimensionError);
    CHECK_THROWS_AS(design_task_quantizer(g, s, 6, 20.0, 2.0), DimensionError);
    CHECK_THROWS_AS(design_task_quantizer(g, ComplexMatrix::Identity(4, 4), 2, 20.0, 2.0), DimensionError);
}

TEST_CASE("single ADC budget gives a degenerate design with zero output") {
    Rng rng(4);
    const ComplexMatrix s = random_hpd(rng, 6);
    const ComplexMatrix g = random_matrix(rng, 4, 6);
    const TaskQuantDesign q = design_task_quantizer(g, s, 3, 5.0, 2.0);
    CHECK(q.degenerate);
    CHECK(q.spec.levels == 1);
    CHECK(q.d.isZero(0.0));
    CHECK(q.predicted_mse == approx(q.task_energy));
    const ComplexVector y = random_matrix(rng, 6, 1);
    CHECK(apply_task_quantizer(q, y, rng).isZero(0.0));
    CHECK_THROWS_AS(apply_task_quantizer(q, ComplexVector::Zero(5), rng), DimensionError);
}

TEST_CASE("empirical branch variance matches gamma^2 / kappa") {
    const Desk d = make_desk(14);
    const TaskQuantDesign q = design_task_quantizer(d.lm.gamma, d.lm.sigma_y, kGc, 64.0, 2.0);
    const double target = q.spec.support * q.spec.support / q.kappa;
    Rng rng(15);
    const int trials = 40000;
    RealVector acc = RealVector::Zero(static_cast<Eigen::Index>(kGc));
    for (int i = 0; i < trials; ++i) {
        const ComplexVector z = q.b * observe(d, draw_c(d, rng), rng);
        acc += z.cwiseAbs2();
    }
    for (Eigen::Index g = 0; g < acc.size(); ++g)
        CHECK(acc(g) / trials == approx(target).epsilon(0.02));
}

TEST_CASE("infinite resolution makes D B reproduce the MMSE matrix") {
    const Desk d = make_desk(16);
    const TaskBasis basis = prepare_task_basis(d.lm.gamma, d.lm.sigma_y);
    REQUIRE(numerical_rank(d.lm.gamma) == kGc);
    const TaskQuantDesign q = design_task_quantizer(basis, kGc, bits_for_levels(kGc, 67108864.0), 2.0);
    REQUIRE(q.spec.levels == 67108864);
    CHECK(rel(q.d * q.b, d.lm.gamma) < 1e-6);

    Rng rng(17);
    const ComplexVector y = d.op * draw_c(d, rng);
    const ComplexVector tilde = d.lm.gamma * y;
    CHECK((apply_task_quantizer(q, y, rng) - tilde).norm() <= 1e-6 * tilde.norm());
}

TEST_CASE("single branch design collapses to a unit-modulus phase on the top direction") {
    Rng rng(5);
    const ComplexMatrix s = random_hpd(rng, 6);
    const ComplexMatrix g = random_matrix(rng, 4, 6);
    const TaskBasis basis = prepare_task_basis(g, s);
    const TaskQuantDesign q = design_task_quantizer(basis, 1, 16.0, 2.0);
    REQUIRE(q.b.rows() == 1);
    const ComplexMatrix row = basis.v.col(0).adjoint() * basis.sigma_y_inv_sqrt;
    const cplx u = (q.b * hermitian_sqrt(s) * basis.v.col(0))(0, 0);
    CHECK(std::abs(u) == approx(1.0).epsilon(1e-10));
    CHECK(rel(q.b, u * row) < 1e-10);
}

TEST_CASE("singular values of the whitened task are sorted and padded") {
    Rng rng(6);
    const ComplexMatrix s = random_hpd(rng, 7);
    const ComplexMatrix g = random_matrix(rng, 3, 7);
    const TaskBasis basis = prepare_task_basis(g, s);
    REQUIRE(basis.lambda.size() == 7);
    for (Eigen::Index i = 1; i < 7; ++i)
        CHECK(basis.lambda(i) <= basis.lambda(i - 1));
    for (Eigen::Index i = 3; i < 7; ++i)
        CHECK(basis.lambda(i) == 0.0);
    CHECK(basis.task_energy == approx((g * s * g.adjoint()).trace().real()).epsilon(1e-10));
    CHECK(rel(basis.v.adjoint() * basis.v, ComplexMatrix::Identity(7, 7)) < 1e-12);
    CHECK(rel(basis.sigma_y_inv_sqrt * s * basis.sigma_y_inv_sqrt, ComplexMatrix::Identity(7, 7)) < 1e-10);
    CHECK_THROWS_AS(prepare_task_basis(g, ComplexMatrix::Identity(6, 6)), DimensionError);
}

namespace {

struct PipelineMse {
    double predicted = 0.0;
    double quant = 0.0; // E||c_tilde - c_hat||^2
    double est = 0.0;   // E||c - c_tilde||^2
    double total = 0.0; // E||c - c_hat||^2
};

PipelineMse pipeline_mse(const Desk &d, double levels, double eta, int trials, std::uint64_t seed) {
    const TaskQuantDesign q =
        design_task_quantizer(d.lm.gamma, d.lm.sigma_y, kGc, bits_for_levels(kGc, levels + 0.5), eta);
    REQUIRE(q.spec.levels == static_cast<std::size_t>(levels));
    REQUIRE(q.spec.dither);
    Rng rng(seed);
    PipelineMse m;
    m.predicted = q.predicted_mse;
    for (int i = 0; i < trials; ++i) {
        const ComplexVector c = draw_c(d, rng);
        const ComplexVector y = observe(d, c, rng);
        const ComplexVector tilde = d.lm.gamma * y;
        const ComplexVector hat = apply_task_quantizer(q, y, rng);
        m.quant += (tilde - hat).squaredNorm();
        m.total += (c - hat).squaredNorm();
        m.est += (c - tilde).squaredNorm();
    }
    m.quant /= trials;
    m.total /= trials;
    m.est /= trials;
    return m;
}

} // namespace

// With eta = 2 about 2% of branch inputs overload: the product-of-Gaussians
// path gains are heavier tailed than the Gaussian the closed form assumes, and
// the overload error is outside the dithered noise model (empirical/predicted
// about 1.6 here) and correlates with the linear-estimation residual.
TEST_CASE("predicted MSE matches the dithered pipeline at 16 levels" * doctest::should_fail()) {
    const PipelineMse m = pipeline_mse(make_desk(18), 16.0, 2.0, 10000, 19);
    CHECK(m.quant == approx(m.predicted).epsilon(0.05));
    CHECK(m.total == approx(m.est + m.quant).epsilon(0.03));
}

TEST_CASE("predicted MSE matches the dithered pipeline when overload is negligible") {
    const Desk d = make_desk(18);
    for (double levels : {8.0, 16.0, 32.0}) {
        const PipelineMse m = pipeline_mse(d, levels, 4.0, 10000, 19);
        INFO("levels " << levels);
        CHECK(m.quant == approx(m.predicted).epsilon(0.05));
        CHECK(m.total == approx(m.est + m.quant).epsilon(0.03));
    }
}

TEST_CASE("closed-form MSE of the designed combiner matches its own evaluation") {
    const Desk d = make_desk(20);
    const TaskQuantDesign q = design_task_quantizer(d.lm.gamma, d.lm.sigma_y, kGc, bits_for_levels(kGc, 4.0), 2.0);
    REQUIRE(q.spec.levels == 4);
    CHECK(quantization_mse_for_combiner(d.lm.gamma, d.lm.sigma_y, q.b, 4, 2.0) ==
          approx(q.predicted_mse).epsilon(1e-8));
    CHECK(quantization_mse(d.lm.gamma, d.lm.sigma_y, q.b, q.spec.noise_power()) ==
          approx(q.predicted_mse).epsilon(1e-8));
}

TEST_CASE("designed combiner beats random unit-trace combiners") {
    const Desk d = make_desk(21);
    for (double levels : {2.0, 4.0, 16.0}) {
        const TaskQuantDesign q =
            design_task_quantizer(d.lm.gamma, d.lm.sigma_y, kGc, bits_for_levels(kGc, levels), 2.0);
        Rng rng(22);
        for (int i = 0; i < 50; ++i) {
            ComplexMatrix b = random_matrix(rng, static_cast<Eigen::Index>(kGc), d.lm.sigma_y.rows());
            b /= std::sqrt((b * d.lm.sigma_y * b.adjoint()).trace().real());
            CHECK(q.predicted_mse <
                  quantization_mse_for_combiner(d.lm.gamma, d.lm.sigma_y, b, q.spec.levels, 2.0));
        }
    }
}

TEST_CASE("predicted MSE is non-increasing in the level count") {
    const Desk d = make_desk(23);
    const TaskBasis basis = prepare_task_basis(d.lm.gamma, d.lm.sigma_y);
    double prev = basis.task_energy;
    for (std::size_t levels = 2; levels <= 1024; levels = levels < 16 ? levels + 1 : levels * 2) {
        const TaskQuantDesign q =
            design_task_quantizer(basis, kGc, bits_for_levels(kGc, static_cast<double>(levels) + 0.5), 2.0);
        REQUIRE(q.spec.levels == levels);
        CHECK(q.predicted_mse <= prev);
        CHECK(q.predicted_mse >= 0.0);
        prev = q.predicted_mse;
    }
}

TEST_CASE("estimate_cascaded reshapes into per-UE blocks") {
    const Desk d = make_desk(24);
    const TaskQuantDesign q = design_task_quantizer(d.lm.gamma, d.lm.sigma_y, kGc, 96.0, 2.0);
    Rng rng(25);
    const ComplexVector y = observe(d, d.ch.c, rng);
    Rng r1(26);
    Rng r2(26);
    const EstimateReport rep = estimate_cascaded(y, q, d.ch, d.cfg, r1);
    CHECK(rep.estimate == apply_task_quantizer(q, y, r2));
    const auto n = static_cast<Eigen::Index>(d.cfg.n_bs_antennas);
    REQUIRE(rep.matrix.rows() == n * 2);
    REQUIRE(rep.matrix.cols() == 16);
    REQUIRE(rep.blocks.size() == 2);
    for (Eigen::Index k = 0; k < 2; ++k)
        CHECK(rep.blocks[static_cast<std::size_t>(k)] == rep.matrix.middleRows(k * n, n));
    CHECK(rep.matrix == unvec(rep.estimate, n * 2, 16));
    CHECK(rep.nmse == approx(nmse(d.ch.cascaded(), rep.matrix)));
    CHECK(rep.bits_consumed == q.budget.consumed_bits());
    CHECK(rep.bits_consumed <= 96.0);
}

TEST_CASE("cascaded blocks reject a row count that is not a multiple of N") {
    CHECK_THROWS_AS(cascaded_blocks(ComplexMatrix::Zero(7, 3), 2), DimensionError);
    CHECK_THROWS_AS(cascaded_blocks(ComplexMatrix::Zero(4, 3), 0), DimensionError);
    CHECK(cascaded_blocks(ComplexMatrix::Zero(6, 3), 2).size() == 3);
}

namespace {

struct Individual {
    ScenarioConfig cfg;
    ChannelRealization ch;
    PilotPlan plan;
    ComplexMatrix w_zhat;
};

Individual make_individual(const ScenarioConfig &cfg, std::size_t t, std::size_t l_a, std::uint64_t seed) {
    Individual s;
    s.cfg = cfg;
    Rng rng(seed);
    s.ch = sample_channels(cfg, rng);
    s.plan = make_pilot_plan(cfg, Mode::individual, t, 1, l_a, rng);
    s.w_zhat = build_w_zhat(s.plan, cfg);
    return s;
}

EstimateReport run_stage1(const Individual &s, std::size_t levels, std::uint64_t seed) {
    const TaskQuantDesign d1 =
        stage1_design(s.ch.w_f, s.ch.sigma_alpha_f, s.w_zhat, s.ch.link.noise_ris, levels, 2.0);
    Rng rng(seed);
    const RisObservation ris = simulate_ris_rx(s.plan, s.ch, s.cfg, d1.spec, rng);
    return stage1_estimate(ris.pi_z, d1, s.ch.f);
}

} // namespace

TEST_CASE("stage-I design tends to the MMSE matrix at infinite resolution") {
    const Individual s = make_individual(ScenarioConfig{}, 4, 8, 30);
    const ComplexMatrix gamma_f = linear_mmse(s.w_zhat, s.ch.w_f, s.ch.sigma_alpha_f, s.ch.link.noise_ris).gamma;
    const TaskQuantDesign q =
        stage1_design(s.ch.w_f, s.ch.sigma_alpha_f, s.w_zhat, s.ch.link.noise_ris, std::size_t{1} << 40, 2.0);
    CHECK(rel(q.b, ComplexMatrix::Identity(q.b.rows(), q.b.cols())) == 0.0);
    CHECK(rel(q.d, gamma_f) < 1e-6);
    const double max_var = linear_mmse(s.w_zhat, s.ch.w_f, s.ch.sigma_alpha_f, s.ch.link.noise_ris)
                               .sigma_y.diagonal().real().maxCoeff();
    CHECK(q.spec.support == approx(std::sqrt(q.kappa * max_var)).epsilon(1e-12));
}

TEST_CASE("stage-I factored and full covariances agree") {
    const Individual s = make_individual(ScenarioConfig{}, 4, 6, 31);
    const TaskQuantDesign a = stage1_design(s.ch.w_f, s.ch.sigma_alpha_f, s.w_zhat, s.ch.link.noise_ris, 16, 2.0);
    const TaskQuantDesign b = stage1_design(s.ch.sigma_f, s.w_zhat, s.ch.link.noise_ris, 16, 2.0);
    CHECK(rel(a.d, b.d) < 1e-8);
    CHECK(a.spec.support == approx(b.spec.support).epsilon(1e-10));
    CHECK(a.predicted_mse == approx(b.predicted_mse).epsilon(1e-6));
    CHECK(a.budget.n_adc_pairs == 6 * 4);
    CHECK_THROWS_AS(stage1_design(s.ch.sigma_f, s.w_zhat, 0.0, 16, 2.0), ConfigError);
}

TEST_CASE("all-passive RIS leaves the prior-mean estimate of F") {
    const Individual s = make_individual(ScenarioConfig{}, 4, 0, 32);
    CHECK(s.w_zhat.isZero(0.0));
    const ComplexMatrix gamma_f = linear_mmse(s.w_zhat, s.ch.w_f, s.ch.sigma_alpha_f, s.ch.link.noise_ris).gamma;
    CHECK(gamma_f.isZero(0.0));
    const EstimateReport rep = run_stage1(s, 256, 33);
    CHECK(rep.matrix.isZero(0.0));
    CHECK(rep.nmse == 1.0);
}

TEST_CASE("fully sensing RIS with 8-bit ADCs estimates F below -20 dB") {
    ScenarioConfig cfg;
    cfg.tx_power_dbm = 40.0;
    double acc = 0.0;
    const int trials = 50;
    for (int i = 0; i < trials; ++i) {
        const Individual s = make_individual(cfg, 4, cfg.n_ris(), 1000 + static_cast<std::uint64_t>(i));
        acc += run_stage1(s, 256, 2000 + static_cast<std::uint64_t>(i)).nmse;
    }
    CHECK(10.0 * std::log10(acc / trials) < -20.0);
}

TEST_CASE("stage-I NMSE does not increase with the number of sensing elements") {
    const ScenarioConfig cfg;
    const std::vector<std::size_t> counts{2, 4, 8, 12, 16};
    std::vector<double> acc(counts.size(), 0.0);
    const int trials = 100;
    for (int i = 0; i < trials; ++i) {
        for (std::size_t j = 0; j < counts.size(); ++j) {
            const Individual s = make_individual(cfg, 4, counts[j], 3000 + static_cast<std::uint64_t>(i));
            acc[j] += run_stage1(s, 16, 4000 + static_cast<std::uint64_t>(i)).nmse;
        }
    }
    for (std::size_t j = 1; j < counts.size(); ++j)
        CHECK(acc[j] <= acc[j - 1]);
}

TEST_CASE("channel-F MMSE matrix rank follows the sensing condition") {
    const ristq::testing::RankTally t = ristq::testing::run_rank_suite(ristq::testing::RankCase::gamma_f, 200, 103);
    CHECK(t.cond_true >= 200);
    CHECK(t.cond_false >= 200);
    CHECK(t.cond_false_full == 0);
    CHECK(t.attainment() >= 0.99);
}

TEST_CASE("stage-II pipeline with perfect F is lossless at infinite resolution") {
    const Individual s = make_individual(ScenarioConfig{}, 4, 4, 40);
    const ComplexMatrix w_y = build_w_y(s.plan, s.ch.f, s.cfg);
    const TaskBasis basis = stage2_basis(s.ch.w_g, s.ch.sigma_alpha_g, w_y, s.ch.link.noise_bs);
    const TaskBasis full = stage2_basis(s.ch.sigma_g, w_y, s.ch.link.noise_bs);
    CHECK(rel(basis.gamma, full.gamma) < 1e-8);
    const std::size_t g = s.cfg.paths_rb;
    const TaskQuantDesign q = design_task_quantizer(basis, g, bits_for_levels(g, 67108864.0), 2.0);
    Rng rng(41);
    const StackedObservation obs = simulate_bs_rx(s.plan, s.ch, s.cfg, rng);
    const ComplexVector tilde = basis.gamma * obs.y;
    const EstimateReport rep = stage2_estimate(obs.y, q, s.ch.g, rng);
    CHECK((rep.estimate - tilde).norm() <= 1e-6 * tilde.norm());
    CHECK(rep.matrix.rows() == static_cast<Eigen::Index>(s.cfg.n_bs_antennas));
    CHECK(rep.matrix.cols() == static_cast<Eigen::Index>(s.cfg.n_ris()));
    CHECK(rep.nmse == approx(nmse(s.ch.g, rep.matrix)));

    const TaskQuantDesign q2 = stage2_design(s.ch.sigma_g, w_y, s.ch.link.noise_bs, g, 40.0, 2.0);
    const TaskQuantDesign q3 = design_task_quantizer(basis, g, 40.0, 2.0);
    CHECK(q2.predicted_mse == approx(q3.predicted_mse).epsilon(1e-6));
}

TEST_CASE("cascaded channel from individual estimates") {
    const Individual s = make_individual(ScenarioConfig{}, 4, 4, 50);
    const ComplexMatrix c = s.ch.cascaded();
    const EstimateReport exact = cascaded_from_individual(s.ch.f, s.ch.g, c);
    CHECK(exact.nmse < 1e-24);
    CHECK(cascaded_from_individual(s.ch.f, ComplexMatrix::Zero(8, 16), c).nmse == 1.0);
    CHECK_THROWS_AS(cascaded_from_individual(s.ch.f, ComplexMatrix::Zero(8, 15), c), DimensionError);

    const auto n = static_cast<Eigen::Index>(s.cfg.n_bs_antennas);
    REQUIRE(exact.blocks.size() == 2);
    for (Eigen::Index k = 0; k < 2; ++k) {
        const ComplexMatrix oracle = s.ch.g * s.ch.f.col(k).asDiagonal();
        CHECK(rel(exact.blocks[static_cast<std::size_t>(k)], oracle) < 1e-12);
        CHECK(exact.blocks[static_cast<std::size_t>(k)] == exact.matrix.middleRows(k * n, n));
    }
}

TEST_CASE("cascaded NMSE is continuous in a perturbation of G") {
    const Individual s = make_individual(ScenarioConfig{}, 4, 4, 51);
    const ComplexMatrix c = s.ch.cascaded();
    Rng rng(52);
    const ComplexMatrix e = random_matrix(rng, 8, 16) * (s.ch.g.norm() / std::sqrt(8.0 * 16.0));
    const ComplexMatrix ce = khatri_rao(s.ch.f.transpose(), e);
    double prev = 0.0;
    for (int i = 0; i <= 40; ++i) {
        const double delta = 0.025 * i;
        const double v = cascaded_from_individual(s.ch.f, s.ch.g + delta * e, c).nmse;
        const double oracle = delta * delta * ce.squaredNorm() / c.squaredNorm();
        CHECK(v == approx(oracle).epsilon(1e-9).scale(1e-20));
        CHECK(v >= prev);
        CHECK(std::isfinite(v));
        prev = v;
    }
}
