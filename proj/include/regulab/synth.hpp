#pragma once

#include "regulab/model.hpp"
#include "regulab/postproc.hpp"

#include <Eigen/Dense>

namespace regulab::synth {

/// Constant blocks of the cascaded data equation for a given filter and
/// internal-model order: calBc = col(0_d, 0_n, L), calD = col(G, L, 0_n),
/// A_n(theta) = blkdiag(Phi(theta), Lambda_F, Lambda_F).
struct CascadeConstants {
    Eigen::VectorXd calBc;  // (d + 2n)
    Eigen::VectorXd calD;   // (d + 2n)
    Eigen::VectorXd lambda; // filter diagonal, for A_n(theta)
    int n = 0;
    int d = 0;

    static CascadeConstants make(const model::FilterParams& fp, int d);
    Eigen::MatrixXd An_theta(const Eigen::VectorXd& theta) const;
    Eigen::Index dim() const { return d + 2 * n; }
};

/// Data-driven estimate of the coupling H = D*C from the post-processed data:
///   H_hat = (Z+ - A_n Z - calBc U) pinv([Z_zeta; X]) [I_2n; 0],
/// keeping the first 2n columns (the zeta coupling) and discarding the
/// M_rho block. Requires the excitation condition rank [Z_zeta; X] = 3n;
/// throws AssumptionError naming Assumption 7 otherwise.
Eigen::MatrixXd estimate_H(const postproc::DataMatrices& dm, const Eigen::VectorXd& theta,
                           const model::FilterParams& fp, double pinv_rel_tol = 1e-10);

/// A_hat = A_n(theta) + H_hat [0_{2n x d}, I_2n]: the estimated coupling sits
/// on the last 2n state columns, reproducing the cascade matrix block-exactly.
Eigen::MatrixXd assemble_Ahat(const Eigen::MatrixXd& H_hat, const Eigen::VectorXd& theta,
                              const model::FilterParams& fp);

struct GainResult {
    Eigen::MatrixXd P;
    Eigen::RowVectorXd K; // R^{-1} calBc^T P; A_hat - calBc K is Hurwitz
    double care_residual = 0.0;
    double closed_loop_margin = 0.0; // -max Re eig(A_hat - calBc K)
};

/// Solve the CARE A'P + PA - P B R^{-1} B' P + Q = 0 (satisfying the
/// stabilization inequality with equality) after a PBH stabilizability check
/// over the closed right-half-plane eigenvalues of A_hat.
GainResult stabilizing_gain(const Eigen::MatrixXd& A_hat, const Eigen::VectorXd& calBc,
                            const Eigen::MatrixXd& Q, double R);

struct SynthesisResult {
    Eigen::MatrixXd H_hat;
    Eigen::MatrixXd A_hat;
    Eigen::MatrixXd P;
    Eigen::RowVectorXd K;
    Eigen::MatrixXd Q_used;
    double R_used = 1.0;
    double care_residual = 0.0;
    double closed_loop_margin = 0.0;
};

/// estimate_H + assemble_Ahat + stabilizing_gain in one call.
SynthesisResult synthesize(const postproc::DataMatrices& dm, const Eigen::VectorXd& theta,
                           const model::FilterParams& fp, const Eigen::MatrixXd& Q,
                           double R, double pinv_rel_tol = 1e-10);

/// Model-based construction for the filter representation (test / verify
/// only; uses the true plant):
///   Pi1 F = (A - Pi1 L C) Pi1,  H1 = C Pi1,
///   Pi2 F = (A - Pi1 L C) Pi2,  Pi2 L = B,  H2 = C Pi2.
/// Built by observer pole placement onto the filter spectrum followed by
/// eigenvector matching.
struct PiSolution {
    Eigen::MatrixXd Pi1;
    Eigen::MatrixXd Pi2;
    Eigen::RowVectorXd H1;
    Eigen::RowVectorXd H2;
    Eigen::VectorXd observer_gain; // Pi1 L
    Eigen::MatrixXd eigvecs;       // columns: eigenvectors of A - Pi1 L C, ordered as lambda
    double max_residual = 0.0;     // worst residual over the five defining relations
};

PiSolution solve_pi(const model::LtiPlant& plant, const model::FilterParams& fp);

/// Transverse output coupling: T_rho diagonalizes (A - Pi1 L C) onto Lambda_F
/// and M_rho = C T_rho^{-1}. Columns of T_rho^{-1} are unit-norm eigenvectors
/// with the largest-magnitude component positive, so M_rho is canonical for
/// rho(0) = T_rho^{-1} 1_n.
struct MRhoSolution {
    Eigen::RowVectorXd M_rho;
    Eigen::MatrixXd T_rho;
};

MRhoSolution solve_m_rho(const model::LtiPlant& plant, const Eigen::MatrixXd& Pi1,
                         const model::FilterParams& fp);

/// Steady-state maps of the regulated closed loop (test / verify only).
/// K_applied is the gain as applied, u = K_applied col(eta_e, zeta_y -
/// zeta_r, zeta_u). Solves the transverse Sylvester equation first, then the
/// coupled system for (Psi_eta, Psi_zeta_e, Psi_zeta_u) via Kronecker
/// vectorization. Throws NumericError on spectral overlap with S.
struct PsiSolution {
    Eigen::MatrixXd Psi_rho;    // n x d
    Eigen::MatrixXd Psi_eta;    // d x d
    Eigen::MatrixXd Psi_zeta_e; // n x d
    Eigen::MatrixXd Psi_zeta_u; // n x d
    double residual_rho = 0.0;
    double residual_eta = 0.0;
    double residual_zeta_e = 0.0;
    double residual_zeta_u = 0.0;
    double residual_chain = 0.0;    // Psi_eta_i S = Psi_eta_{i+1}
    double residual_last_row = 0.0; // companion last-row identity

    /// Stacked col(Psi_eta, Psi_zeta_e, Psi_zeta_u), (d+2n) x d.
    Eigen::MatrixXd Psi() const;
};

PsiSolution sylvester_psi(const model::LtiPlant& plant, const model::Exosystem& exo,
                          const model::FilterParams& fp, const Eigen::VectorXd& theta,
                          const Eigen::RowVectorXd& K_applied);

} // namespace regulab::synth
