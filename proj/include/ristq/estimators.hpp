// SPDX-License-Identifier: Apache-2.0
//
// Hardware-limited task-based quantization: analog combiner B, scalar ADCs
// and digital matrix D designed jointly for a linear MMSE task. Covers the
// cascaded estimator and the two-stage (F, then G) individual estimator.
#pragma once

#include <cstddef>
#include <vector>

#include "ristq/channel_model.hpp"
#include "ristq/matrix_ops.hpp"
#include "ristq/quantizer.hpp"
#include "ristq/random.hpp"

namespace ristq {

/// ||truth - estimate||_F^2 / ||truth||_F^2. Throws Error for a zero truth.
double nmse(const ComplexMatrix &truth, const ComplexMatrix &estimate);

/// Sigma_x op^H (op Sigma_x op^H + noise_var I)^{-1}.
ComplexMatrix mmse_matrix(const ComplexMatrix &sigma_x, const ComplexMatrix &op, double noise_var);
inline ComplexMatrix mmse_matrix_cascaded(const ComplexMatrix &sigma_c, const ComplexMatrix &sbar,
                                          double noise_var) {
    return mmse_matrix(sigma_c, sbar, noise_var);
}

struct LinearMmse {
    ComplexMatrix gamma;   // task x obs
    ComplexMatrix sigma_y; // obs x obs
    double prior_energy = 0.0; // tr(Sigma_x)
    double mmse = 0.0;         // tr(Sigma_x) - tr(Gamma Sigma_y Gamma^H)
};

/// Same quantities for Sigma_x = basis diag(weights) basis^H without forming Sigma_x.
LinearMmse linear_mmse(const ComplexMatrix &op, const ComplexMatrix &basis, const RealVector &weights,
                       double noise_var);
LinearMmse linear_mmse(const ComplexMatrix &op, const ComplexMatrix &sigma_x, double noise_var);

/// Design-independent factorization of a task, reusable across bit budgets.
struct TaskBasis {
    ComplexMatrix gamma;
    ComplexMatrix sigma_y;
    ComplexMatrix sigma_y_inv_sqrt;
    ComplexMatrix v;    // right singular vectors of Gamma Sigma_y^{1/2}
    RealVector lambda;  // singular values, descending, padded with zeros to obs dim
    double task_energy = 0.0; // tr(Gamma Sigma_y Gamma^H)
};

TaskBasis prepare_task_basis(const ComplexMatrix &gamma, const ComplexMatrix &sigma_y);

struct TaskQuantDesign {
    ComplexMatrix b;     // G x obs
    ComplexMatrix d;     // task x G
    QuantizerSpec spec;
    BitBudget budget;
    RealVector singular_values;
    double kappa = 0.0;
    double zeta = 0.0;
    double predicted_mse = 0.0; // E||c_tilde - c_hat||^2 under the dither noise model
    double task_energy = 0.0;   // tr(Gamma Sigma_y Gamma^H)
    bool degenerate = false;    // fewer than two levels or infeasible kappa: D = 0

    std::size_t n_branches() const { return static_cast<std::size_t>(b.rows()); }
};

TaskQuantDesign design_task_quantizer(const TaskBasis &basis, std::size_t g, double total_bits,
                                      double eta, bool dither = true);
TaskQuantDesign design_task_quantizer(const ComplexMatrix &gamma, const ComplexMatrix &sigma_y,
                                      std::size_t g, double total_bits, double eta,
                                      bool dither = true);

/// Digital matrix for a fixed combiner: Gamma Sigma_y B^H (B Sigma_y B^H + q I)^{-1}.
ComplexMatrix digital_matrix(const ComplexMatrix &gamma, const ComplexMatrix &sigma_y,
                             const ComplexMatrix &b, double quant_noise);

/// Resulting E||c_tilde - c_hat||^2 for a fixed combiner and quantization noise power q.
double quantization_mse(const ComplexMatrix &gamma, const ComplexMatrix &sigma_y,
                        const ComplexMatrix &b, double quant_noise);

/// quantization_mse with the support set by gamma^2 = kappa max diag(B Sigma_y B^H).
double quantization_mse_for_combiner(const ComplexMatrix &gamma, const ComplexMatrix &sigma_y,
                                     const ComplexMatrix &b, std::size_t levels, double eta);

/// D Q(B y). Dither follows design.spec.dither.
ComplexVector apply_task_quantizer(const TaskQuantDesign &design, const ComplexVector &y, Rng &rng);

struct EstimateReport {
    ComplexVector estimate;
    ComplexMatrix matrix;             // unvec'd estimate
    std::vector<ComplexMatrix> blocks; // per-UE C_k (cascaded only)
    double nmse = 0.0;
    double bits_consumed = 0.0;
};

/// Splits unvec(c) (NK x L) into the K per-UE N x L blocks.
std::vector<ComplexMatrix> cascaded_blocks(const ComplexMatrix &c_matrix, std::size_t n_bs);

EstimateReport estimate_cascaded(const ComplexVector &y, const TaskQuantDesign &design,
                                 const ChannelRealization &truth, const ScenarioConfig &cfg, Rng &rng);

/// No analog combining at the RIS: B = I, support sqrt(kappa sigma_max^2).
TaskQuantDesign stage1_design(const ComplexMatrix &sigma_f, const ComplexMatrix &w_zhat,
                              double noise_ris, std::size_t levels, double eta, bool dither = true);
/// Same design with sigma_f given as basis diag(weights) basis^H.
TaskQuantDesign stage1_design(const ComplexMatrix &basis, const RealVector &weights,
                              const ComplexMatrix &w_zhat, double noise_ris, std::size_t levels,
                              double eta, bool dither = true);

EstimateReport stage1_estimate(const ComplexVector &pi_z, const TaskQuantDesign &design,
                               const ComplexMatrix &true_f);

/// Task basis for g given W_y built from an estimate of F.
TaskBasis stage2_basis(const ComplexMatrix &sigma_g, const ComplexMatrix &w_y, double noise_bs);
TaskBasis stage2_basis(const ComplexMatrix &basis, const RealVector &weights, const ComplexMatrix &w_y,
                       double noise_bs);
TaskQuantDesign stage2_design(const ComplexMatrix &sigma_g, const ComplexMatrix &w_y, double noise_bs,
                              std::size_t g, double total_bits, double eta, bool dither = true);

EstimateReport stage2_estimate(const ComplexVector &y, const TaskQuantDesign &design,
                               const ComplexMatrix &true_g, Rng &rng);

/// C_hat = F_hat^T ⋄ G_hat compared against the true cascaded channel.
EstimateReport cascaded_from_individual(const ComplexMatrix &f_hat, const ComplexMatrix &g_hat,
                                        const ComplexMatrix &true_c);

} // namespace ristq
