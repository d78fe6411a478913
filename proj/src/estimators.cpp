// SPDX-License-Identifier: Apache-2.0
#include "ristq/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <span>

#include "ristq/error.hpp"

namespace ristq {

namespace {

double trace_quadratic(const ComplexMatrix &a, const ComplexMatrix &h) {
    // tr(a h a^H) for Hermitian h.
    return (a * h).cwiseProduct(a.conjugate()).sum().real();
}

LinearMmse finish_mmse(ComplexMatrix cross, ComplexMatrix sigma_y, double prior) {
    LinearMmse out;
    out.gamma = hpd_solve(sigma_y, cross.adjoint()).adjoint();
    out.sigma_y = std::move(sigma_y);
    out.prior_energy = prior;
    out.mmse = prior - out.gamma.cwiseProduct(cross.conjugate()).sum().real();
    return out;
}

void require_noise(double noise_var, const char *who) {
    if (!(noise_var > 0.0))
        throw ConfigError(std::string(who) + ": noise variance must be positive");
}

TaskQuantDesign degenerate_design(const TaskBasis &basis, std::size_t g, const BitBudget &budget,
                                  double eta, bool dither) {
    TaskQuantDesign d;
    const auto gi = static_cast<Eigen::Index>(g);
    d.b = (1.0 / std::sqrt(static_cast<double>(g))) * basis.v.leftCols(gi).adjoint() *
          basis.sigma_y_inv_sqrt;
    d.d = ComplexMatrix::Zero(basis.gamma.rows(), gi);
    d.spec = {budget.per_adc_levels, 0.0, eta, dither};
    d.budget = budget;
    d.singular_values = basis.lambda;
    d.predicted_mse = basis.task_energy;
    d.task_energy = basis.task_energy;
    d.degenerate = true;
    return d;
}

} // namespace

double nmse(const ComplexMatrix &truth, const ComplexMatrix &estimate) {
    if (truth.rows() != estimate.rows() || truth.cols() != estimate.cols())
        throw DimensionError("nmse: shapes differ");
    const double denom = truth.squaredNorm();
    if (!(denom > 0.0))
        throw Error("nmse: truth has zero norm");
    return (truth - estimate).squaredNorm() / denom;
}

ComplexMatrix mmse_matrix(const ComplexMatrix &sigma_x, const ComplexMatrix &op, double noise_var) {
    return linear_mmse(op, sigma_x, noise_var).gamma;
}

LinearMmse linear_mmse(const ComplexMatrix &op, const ComplexMatrix &sigma_x, double noise_var) {
    require_noise(noise_var, "linear_mmse");
    if (op.cols() != sigma_x.rows() || sigma_x.rows() != sigma_x.cols())
        throw DimensionError("linear_mmse: operator and covariance do not conform");
    ComplexMatrix cross = sigma_x * op.adjoint();
    ComplexMatrix sigma_y = op * cross;
    sigma_y.diagonal().array() += noise_var;
    sigma_y = 0.5 * (sigma_y + sigma_y.adjoint()).eval();
    return finish_mmse(std::move(cross), std::move(sigma_y), sigma_x.trace().real());
}

LinearMmse linear_mmse(const ComplexMatrix &op, const ComplexMatrix &basis, const RealVector &weights,
                       double noise_var) {
    require_noise(noise_var, "linear_mmse");
    if (op.cols() != basis.rows() || basis.cols() != weights.size())
        throw DimensionError("linear_mmse: operator, basis and weights do not conform");
    const ComplexMatrix ow = op * basis;
    const auto w = weights.cast<cplx>().asDiagonal();
    ComplexMatrix cross = basis * w * ow.adjoint();
    ComplexMatrix sigma_y = ow * w * ow.adjoint();
    sigma_y.diagonal().array() += noise_var;
    sigma_y = 0.5 * (sigma_y + sigma_y.adjoint()).eval();
    const double prior = (basis.colwise().squaredNorm().transpose().array() * weights.array()).sum();
    // Solving against the thin factor keeps the column space of gamma inside span(basis).
    LinearMmse out;
    out.gamma = basis * hpd_solve(sigma_y, ow * w).adjoint();
    out.sigma_y = std::move(sigma_y);
    out.prior_energy = prior;
    out.mmse = prior - out.gamma.cwiseProduct(cross.conjugate()).sum().real();
    return out;
}

TaskBasis prepare_task_basis(const ComplexMatrix &gamma, const ComplexMatrix &sigma_y) {
    if (sigma_y.rows() != sigma_y.cols() || gamma.cols() != sigma_y.rows())
        throw DimensionError("prepare_task_basis: Gamma and Sigma_y do not conform");
    TaskBasis basis;
    basis.gamma = gamma;
    basis.sigma_y = sigma_y;
    basis.sigma_y_inv_sqrt = hermitian_inv_sqrt(sigma_y);
    const ComplexMatrix tilde = gamma * hermitian_sqrt(sigma_y);
    Eigen::BDCSVD<ComplexMatrix> svd(tilde, Eigen::ComputeFullV);
    basis.v = svd.matrixV();
    basis.lambda = RealVector::Zero(sigma_y.rows());
    const RealVector &s = svd.singularValues();
    basis.lambda.head(s.size()) = s;
    basis.task_energy = s.squaredNorm();
    return basis;
}

ComplexMatrix digital_matrix(const ComplexMatrix &gamma, const ComplexMatrix &sigma_y,
                             const ComplexMatrix &b, double quant_noise) {
    if (b.cols() != sigma_y.rows() || gamma.cols() != sigma_y.rows())
        throw DimensionError("digital_matrix: dimensions do not conform");
    const ComplexMatrix sb = sigma_y * b.adjoint();
    ComplexMatrix m = b * sb;
    m.diagonal().array() += quant_noise;
    m = 0.5 * (m + m.adjoint()).eval();
    const ComplexMatrix p = gamma * sb;
    return hpd_solve(m, p.adjoint()).adjoint();
}

double quantization_mse(const ComplexMatrix &gamma, const ComplexMatrix &sigma_y,
                        const ComplexMatrix &b, double quant_noise) {
    const ComplexMatrix d = digital_matrix(gamma, sigma_y, b, quant_noise);
    const ComplexMatrix p = gamma * sigma_y * b.adjoint();
    return trace_quadratic(gamma, sigma_y) - d.cwiseProduct(p.conjugate()).sum().real();
}

double quantization_mse_for_combiner(const ComplexMatrix &gamma, const ComplexMatrix &sigma_y,
                                     const ComplexMatrix &b, std::size_t levels, double eta) {
    const ComplexMatrix h = b * sigma_y * b.adjoint();
    const double max_var = h.diagonal().real().maxCoeff();
    const QuantizerSpec spec{levels, support_from_input_power(max_var, eta, levels), eta, true};
    return quantization_mse(gamma, sigma_y, b, spec.noise_power());
}

TaskQuantDesign design_task_quantizer(const TaskBasis &basis, std::size_t g, double total_bits,
                                      double eta, bool dither) {
    const auto obs = static_cast<std::size_t>(basis.sigma_y.rows());
    if (g == 0 || g > obs)
        throw DimensionError("design_task_quantizer: G must be in [1, observation dimension]");
    const BitBudget budget = make_bit_budget(total_bits, g);
    const std::size_t levels = budget.per_adc_levels;
    if (!kappa_feasible(eta, levels) || !(basis.lambda(0) > 0.0))
        return degenerate_design(basis, g, budget, eta, dither);

    TaskQuantDesign d;
    d.kappa = kappa(eta, levels);
    const double nu = static_cast<double>(levels);
    const double coef = 4.0 * d.kappa / (3.0 * nu * nu * static_cast<double>(g));
    const auto gi = static_cast<Eigen::Index>(g);
    const WaterFillResult wf =
        water_fill(std::span<const double>(basis.lambda.data(), g), coef);
    d.zeta = wf.zeta;

    RealVector lam(gi);
    for (Eigen::Index i = 0; i < gi; ++i)
        lam(i) = std::sqrt(wf.squared_diagonal[static_cast<std::size_t>(i)]);
    const ComplexMatrix lam2 = lam.array().square().matrix().cast<cplx>().asDiagonal();
    const ComplexMatrix u = equalizing_unitary(lam2);
    d.b = u * lam.cast<cplx>().asDiagonal() * basis.v.leftCols(gi).adjoint() * basis.sigma_y_inv_sqrt;

    d.spec = {levels, support_from_kappa(g, d.kappa), eta, dither};
    d.budget = budget;
    d.d = digital_matrix(basis.gamma, basis.sigma_y, d.b, d.spec.noise_power());
    const ComplexMatrix p = basis.gamma * basis.sigma_y * d.b.adjoint();
    d.task_energy = basis.task_energy;
    d.predicted_mse = basis.task_energy - d.d.cwiseProduct(p.conjugate()).sum().real();
    d.singular_values = basis.lambda;
    d.degenerate = budget.degenerate();
    return d;
}

TaskQuantDesign design_task_quantizer(const ComplexMatrix &gamma, const ComplexMatrix &sigma_y,
                                      std::size_t g, double total_bits, double eta, bool dither) {
    return design_task_quantizer(prepare_task_basis(gamma, sigma_y), g, total_bits, eta, dither);
}

ComplexVector apply_task_quantizer(const TaskQuantDesign &design, const ComplexVector &y, Rng &rng) {
    if (y.size() != design.b.cols())
        throw DimensionError("apply_task_quantizer: observation length does not match B");
    const ComplexVector z = design.b * y;
    const QuantizedVector q = quantize_complex_vector(z, design.spec, rng);
    return design.d * q.output;
}

std::vector<ComplexMatrix> cascaded_blocks(const ComplexMatrix &c_matrix, std::size_t n_bs) {
    const auto n = static_cast<Eigen::Index>(n_bs);
    if (n == 0 || c_matrix.rows() % n != 0)
        throw DimensionError("cascaded_blocks: row count is not a multiple of N");
    std::vector<ComplexMatrix> out;
    for (Eigen::Index k = 0; k < c_matrix.rows() / n; ++k)
        out.emplace_back(c_matrix.middleRows(k * n, n));
    return out;
}

EstimateReport estimate_cascaded(const ComplexVector &y, const TaskQuantDesign &design,
                                 const ChannelRealization &truth, const ScenarioConfig &cfg, Rng &rng) {
    EstimateReport r;
    r.estimate = apply_task_quantizer(design, y, rng);
    const auto rows = static_cast<Eigen::Index>(cfg.n_bs_antennas * cfg.n_ues);
    r.matrix = unvec(r.estimate, rows, static_cast<Eigen::Index>(cfg.n_ris()));
    r.blocks = cascaded_blocks(r.matrix, cfg.n_bs_antennas);
    r.nmse = nmse(truth.cascaded(), r.matrix);
    r.bits_consumed = design.budget.consumed_bits();
    return r;
}

namespace {

TaskQuantDesign stage1_from_mmse(const LinearMmse &lm, const ComplexMatrix &w_zhat, std::size_t levels,
                                 double eta, bool dither) {
    const auto obs = w_zhat.rows();
    std::size_t active = 0;
    for (Eigen::Index i = 0; i < obs; ++i)
        if (w_zhat.row(i).squaredNorm() > 0.0)
            ++active;

    TaskQuantDesign d;
    d.b = ComplexMatrix::Identity(obs, obs);
    d.budget = {0.0, std::max<std::size_t>(active, 1), levels};
    d.budget.total_bits = d.budget.consumed_bits();
    d.task_energy = trace_quadratic(lm.gamma, lm.sigma_y);
    d.singular_values = RealVector();
    d.spec = {levels, 0.0, eta, dither};
    if (levels == 0 || !kappa_feasible(eta, levels)) {
        d.d = ComplexMatrix::Zero(lm.gamma.rows(), obs);
        d.predicted_mse = d.task_energy;
        d.degenerate = true;
        return d;
    }
    const double max_var = lm.sigma_y.diagonal().real().maxCoeff();
    d.kappa = kappa(eta, levels);
    d.spec.support = std::sqrt(d.kappa * max_var);
    d.d = digital_matrix(lm.gamma, lm.sigma_y, d.b, d.spec.noise_power());
    d.predicted_mse = d.task_energy -
                      d.d.cwiseProduct((lm.gamma * lm.sigma_y).conjugate()).sum().real();
    d.degenerate = levels < 2;
    return d;
}

} // namespace

TaskQuantDesign stage1_design(const ComplexMatrix &sigma_f, const ComplexMatrix &w_zhat,
                              double noise_ris, std::size_t levels, double eta, bool dither) {
    return stage1_from_mmse(linear_mmse(w_zhat, sigma_f, noise_ris), w_zhat, levels, eta, dither);
}

TaskQuantDesign stage1_design(const ComplexMatrix &basis, const RealVector &weights,
                              const ComplexMatrix &w_zhat, double noise_ris, std::size_t levels,
                              double eta, bool dither) {
    return stage1_from_mmse(linear_mmse(w_zhat, basis, weights, noise_ris), w_zhat, levels, eta, dither);
}

EstimateReport stage1_estimate(const ComplexVector &pi_z, const TaskQuantDesign &design,
                               const ComplexMatrix &true_f) {
    if (pi_z.size() != design.d.cols())
        throw DimensionError("stage1_estimate: observation length does not match D");
    EstimateReport r;
    r.estimate = design.d * pi_z;
    r.matrix = unvec(r.estimate, true_f.rows(), true_f.cols());
    r.nmse = nmse(true_f, r.matrix);
    r.bits_consumed = design.budget.consumed_bits();
    return r;
}

TaskBasis stage2_basis(const ComplexMatrix &sigma_g, const ComplexMatrix &w_y, double noise_bs) {
    const LinearMmse lm = linear_mmse(w_y, sigma_g, noise_bs);
    return prepare_task_basis(lm.gamma, lm.sigma_y);
}

TaskBasis stage2_basis(const ComplexMatrix &basis, const RealVector &weights, const ComplexMatrix &w_y,
                       double noise_bs) {
    const LinearMmse lm = linear_mmse(w_y, basis, weights, noise_bs);
    return prepare_task_basis(lm.gamma, lm.sigma_y);
}

TaskQuantDesign stage2_design(const ComplexMatrix &sigma_g, const ComplexMatrix &w_y, double noise_bs,
                              std::size_t g, double total_bits, double eta, bool dither) {
    return design_task_quantizer(stage2_basis(sigma_g, w_y, noise_bs), g, total_bits, eta, dither);
}

EstimateReport stage2_estimate(const ComplexVector &y, const TaskQuantDesign &design,
                               const ComplexMatrix &true_g, Rng &rng) {
    EstimateReport r;
    r.estimate = apply_task_quantizer(design, y, rng);
    r.matrix = unvec(r.estimate, true_g.rows(), true_g.cols());
    r.nmse = nmse(true_g, r.matrix);
    r.bits_consumed = design.budget.consumed_bits();
    return r;
}

EstimateReport cascaded_from_individual(const ComplexMatrix &f_hat, const ComplexMatrix &g_hat,
                                        const ComplexMatrix &true_c) {
    if (f_hat.rows() != g_hat.cols())
        throw DimensionError("cascaded_from_individual: F_hat must be L x K and G_hat N x L");
    EstimateReport r;
    r.matrix = khatri_rao(f_hat.transpose(), g_hat);
    r.estimate = vec(r.matrix);
    r.blocks = cascaded_blocks(r.matrix, static_cast<std::size_t>(g_hat.rows()));
    r.nmse = nmse(true_c, r.matrix);
    return r;
}

} // namespace ristq
