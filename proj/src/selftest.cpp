// SPDX-License-Identifier: Apache-2.0
#include "ristq/selftest.hpp"

#include <cmath>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "ristq/baselines.hpp"
#include "ristq/channel_model.hpp"
#include "ristq/estimators.hpp"
#include "ristq/harness.hpp"
#include "ristq/pilot_protocol.hpp"
#include "ristq/quantizer.hpp"

namespace ristq {

namespace {

ComplexMatrix random_matrix(Rng &rng, Eigen::Index r, Eigen::Index c) {
    ComplexMatrix m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i)
            m(i, j) = complex_normal(rng, 1.0);
    return m;
}

double rel(const ComplexMatrix &a, const ComplexMatrix &b) {
    const double n = std::max(a.norm(), b.norm());
    return n == 0.0 ? 0.0 : (a - b).norm() / n;
}

struct Check {
    std::string name;
    std::function<bool()> run;
};

std::vector<Check> checks() {
    std::vector<Check> c;
    c.push_back({"khatri-rao vec identity", [] {
                     Rng rng(11);
                     const ComplexMatrix m1 = random_matrix(rng, 3, 4), m2 = random_matrix(rng, 4, 2);
                     const ComplexVector m = random_matrix(rng, 4, 1);
                     const ComplexMatrix lhs = m1 * m.asDiagonal() * m2;
                     return rel(vec(lhs), khatri_rao(m2.transpose(), m1) * m) < 1e-12;
                 }});
    c.push_back({"parallel kernels match serial", [] {
                     Rng rng(12);
                     const ComplexMatrix a = random_matrix(rng, 3, 5), b = random_matrix(rng, 4, 5);
                     return rel(kronecker(a, b), serial::kronecker(a, b)) == 0.0 &&
                            rel(khatri_rao(a, b), serial::khatri_rao(a, b)) == 0.0;
                 }});
    c.push_back({"cascaded channel identity", [] {
                     Rng rng(13);
                     const ScenarioConfig cfg;
                     const ChannelRealization ch = sample_channels(cfg, rng);
                     return rel(ch.c, ch.w_c * ch.alpha_c) < 1e-9 && rel(ch.c, vec(ch.cascaded())) == 0.0;
                 }});
    c.push_back({"water-fill sums to one", [] {
                     const std::vector<double> lam{3.0, 2.0, 0.5, 0.1};
                     const auto wf = water_fill(lam, 0.2);
                     double s = 0.0;
                     for (double v : wf.squared_diagonal)
                         s += v;
                     return std::abs(s - 1.0) < 1e-12;
                 }});
    c.push_back({"equalizing unitary", [] {
                     Rng rng(14);
                     const ComplexMatrix m = random_matrix(rng, 5, 5);
                     const ComplexMatrix h = m * m.adjoint();
                     const ComplexMatrix u = equalizing_unitary(h);
                     const ComplexMatrix e = u * h * u.adjoint();
                     const double target = h.trace().real() / 5.0;
                     const double spread = (e.diagonal().real().array() - target).abs().maxCoeff();
                     return spread < 1e-9 * h.trace().real() &&
                            (u * u.adjoint() - ComplexMatrix::Identity(5, 5)).norm() < 1e-10;
                 }});
    c.push_back({"quantizer output range", [] {
                     Rng rng(15);
                     const QuantizerSpec spec{8, 1.0, 2.0, true};
                     for (int i = 0; i < 1000; ++i) {
                         const double x = uniform(rng, -5.0, 5.0);
                         const double q = q_scalar(x, spec);
                         if (std::abs(q) > spec.support - 0.5 * spec.step() + 1e-15)
                             return false;
                     }
                     return true;
                 }});
    c.push_back({"factored and dense MMSE agree", [] {
                     Rng rng(16);
                     const ScenarioConfig cfg;
                     const ChannelRealization ch = sample_channels(cfg, rng);
                     const PilotPlan plan = make_pilot_plan(cfg, Mode::cascaded, 4, 2, 0, rng);
                     const ComplexMatrix sbar = build_sbar(plan, cfg);
                     const LinearMmse a = linear_mmse(sbar, ch.w_c, ch.sigma_alpha_c, ch.link.noise_bs);
                     const LinearMmse b = linear_mmse(sbar, ch.sigma_c, ch.link.noise_bs);
                     return rel(a.gamma, b.gamma) < 1e-8 && std::abs(a.mmse - b.mmse) < 1e-8 * b.prior_energy;
                 }});
    c.push_back({"design equalizes ADC inputs", [] {
                     Rng rng(17);
                     const ScenarioConfig cfg;
                     const ChannelRealization ch = sample_channels(cfg, rng);
                     const PilotPlan plan = make_pilot_plan(cfg, Mode::cascaded, 4, 2, 0, rng);
                     const LinearMmse lm =
                         linear_mmse(build_sbar(plan, cfg), ch.w_c, ch.sigma_alpha_c, ch.link.noise_bs);
                     const TaskQuantDesign d = design_task_quantizer(lm.gamma, lm.sigma_y, 8, 64, 2.0);
                     const RealVector diag = (d.b * lm.sigma_y * d.b.adjoint()).diagonal().real();
                     return (diag.array() - 1.0 / 8.0).abs().maxCoeff() < 1e-8 / 8.0;
                 }});
    c.push_back({"deterministic sweep", [] {
                     SweepSpec s;
                     s.scenario = scenario_preset("tiny");
                     s.scenario_id = "selftest";
                     s.axis_values = {16, 32};
                     s.n_trials = 3;
                     s.n_subblocks = 2;
                     s.slots_per_subblock = 1;
                     auto strip = [](std::vector<ResultRow> rows) {
                         for (auto &r : rows)
                             r.wall_time_ms = 0.0;
                         return to_csv(rows);
                     };
                     return strip(run_sweep(s)) == strip(run_sweep_serial(s));
                 }});
    return c;
}

} // namespace

int run_selftest(std::ostream &os) {
    int failed = 0;
    for (const auto &check : checks()) {
        bool ok = false;
        std::string detail;
        try {
            ok = check.run();
        } catch (const std::exception &e) {
            detail = std::string(" (") + e.what() + ")";
        }
        os << (ok ? "PASS " : "FAIL ") << check.name << detail << '\n';
        if (!ok)
            ++failed;
    }
    return failed;
}

} // namespace ristq
