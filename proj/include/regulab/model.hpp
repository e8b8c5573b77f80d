#pragma once

#include <Eigen/Dense>

#include <complex>
#include <vector>

namespace regulab::model {

/// The unknown continuous-time SISO plant x' = Ax + Bu, y = Cx.
/// Known to the simulator and the model-based oracles only; the controller
/// path never reads (A, B, C).
struct LtiPlant {
    Eigen::MatrixXd A;
    Eigen::VectorXd B;
    Eigen::RowVectorXd C;
    int n = 0;

    /// Throws ConfigError on dimension inconsistency.
    void validate() const;
};

/// Autonomous exosystem w' = Sw, y_r = C_r w.
struct Exosystem {
    Eigen::MatrixXd S;
    Eigen::RowVectorXd C_r;
    Eigen::VectorXd w0;
    int d = 0;

    void validate() const;
    /// True iff eigenvalues of S are distinct and purely imaginary (within tol).
    bool spectrum_admissible(double tol = 1e-8) const;
};

/// Componentwise box realizing the compact admissible parameter set.
struct ThetaBox {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;

    void validate() const;
    bool contains(const Eigen::VectorXd& theta, double slack = 0.0) const;
};

/// Input/output filter parameters: F is realized directly as the diagonal
/// Lambda_F with strictly negative, pairwise distinct entries; all entries
/// of L must be nonzero so (Lambda_F, L) is controllable.
struct FilterParams {
    Eigen::VectorXd lambda; // diagonal of Lambda_F
    Eigen::VectorXd L;

    int n() const { return static_cast<int>(lambda.size()); }
    Eigen::MatrixXd Lambda() const { return lambda.asDiagonal(); }
    void validate() const;
};

/// Companion matrix Phi(theta): ones on the superdiagonal, last row -theta^T,
/// characteristic polynomial p(l, theta) = l^d + theta_d l^{d-1} + ... + theta_1.
Eigen::MatrixXd companion(const Eigen::VectorXd& theta);

/// Coefficients theta such that det(lI - S) = p(l, theta). S square.
Eigen::VectorXd char_poly_theta(const Eigen::MatrixXd& S);

/// Roots of p(., theta), computed as eigenvalues of companion(theta).
std::vector<std::complex<double>> poly_roots(const Eigen::VectorXd& theta);

struct StructureReport {
    bool controllable = false;
    bool observable = false;
};

/// Kalman rank tests on (A,B) and (C,A); rank via singular values at
/// rel_tol * sigma_max.
StructureReport check_structure(const LtiPlant& plant, double rel_tol = 1e-8);

/// Non-resonance: rank [A - lI, B; C, 0] = n+1 for every root l of p(., theta).
/// Empty theta is vacuously true.
bool pbh_nonresonance(const LtiPlant& plant, const Eigen::VectorXd& theta,
                      double rel_tol = 1e-8);

/// Extended non-resonance on the filter cascade:
/// rank [calA - lI, calB; calC, 0] = 2n+1 for every l in the spectrum of
/// Phi(theta).
bool pbh_cascade(const Eigen::MatrixXd& calA, const Eigen::VectorXd& calB,
                 const Eigen::RowVectorXd& calC, const Eigen::VectorXd& theta,
                 double rel_tol = 1e-8);

/// True iff every eigenvalue satisfies Re(lambda) < -margin.
bool is_hurwitz(const Eigen::MatrixXd& M, double margin = 0.0);

} // namespace regulab::model
