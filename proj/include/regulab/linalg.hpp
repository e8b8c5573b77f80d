#pragma once

#include <Eigen/Dense>

#include <complex>
#include <vector>

namespace regulab::linalg {

struct RankInfo {
    Eigen::Index rank = 0;
    double sigma_max = 0.0;
    double sigma_min = 0.0; // smallest singular value overall (0 if empty)
};

/// Numerical rank: count of singular values above rel_tol * sigma_max.
RankInfo numerical_rank(const Eigen::MatrixXd& M, double rel_tol = 1e-8);

/// Moore-Penrose pseudoinverse via SVD; singular values below
/// rel_tol * sigma_max are treated as zero.
Eigen::MatrixXd pinv(const Eigen::MatrixXd& M, double rel_tol = 1e-10);

/// Matrix exponential by scaling-and-squaring with a Taylor kernel.
Eigen::MatrixXd expm(const Eigen::MatrixXd& A);

/// Columns [phi_1(A)c, ..., phi_kmax(A)c] where
/// phi_k(A) = sum_{j>=0} A^j / (j+k)!.
/// Computed from one exponential of the augmented matrix [[A, c e1^T],[0, N]]
/// with N the nilpotent upper shift, so it inherits expm's robustness.
Eigen::MatrixXd phi_times(const Eigen::MatrixXd& A, const Eigen::VectorXd& c, int kmax);

Eigen::MatrixXd kron(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

/// Solve A^T P + P A = W for symmetric P (Kronecker vectorization;
/// intended for the small dimensions of this toolkit).
Eigen::MatrixXd lyap_transpose(const Eigen::MatrixXd& A, const Eigen::MatrixXd& W);

struct CareResult {
    Eigen::MatrixXd P;       // stabilizing solution, symmetric positive definite
    Eigen::MatrixXd K;       // R^{-1} B^T P
    double residual = 0.0;   // |A'P + PA - PBR^{-1}B'P + Q|_inf
    int newton_iters = 0;
};

/// Continuous-time algebraic Riccati equation
///   A^T P + P A - P B R^{-1} B^T P + Q = 0.
/// Stable invariant subspace of the Hamiltonian for the initial P,
/// then Newton-Kleinman refinement (Lyapunov steps) until the relative
/// increment falls below 1e-10.
/// Throws NumericError if the Hamiltonian splitting fails or P is not PD.
CareResult solve_care(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                      const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R);

/// Spectral abscissa max_i Re(lambda_i).
double spectral_abscissa(const Eigen::MatrixXd& M);

std::vector<std::complex<double>> eigenvalues(const Eigen::MatrixXd& M);

} // namespace regulab::linalg
