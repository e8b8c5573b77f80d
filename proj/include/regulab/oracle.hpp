#pragma once

#include "regulab/model.hpp"
#include "regulab/synth.hpp"

#include <Eigen/Dense>

#include <optional>

namespace regulab::oracle {

/// Ground-truth quantities computed from the true plant and exosystem.
/// Test and `verify` use only; the controller pathway never touches this.
struct OracleBundle {
    Eigen::MatrixXd Pi1;
    Eigen::MatrixXd Pi2;
    Eigen::RowVectorXd H1;
    Eigen::RowVectorXd H2;
    Eigen::RowVectorXd M_rho;
    Eigen::VectorXd theta_star;
    Eigen::MatrixXd calA;     // 2n x 2n filter-cascade block
    Eigen::RowVectorXd calC;  // [H1 H2]
    Eigen::MatrixXd Ac_theta; // (d+2n) x (d+2n) exact cascade matrix
    Eigen::MatrixXd Psi;      // (d+2n) x d steady-state map
    synth::PsiSolution psi_detail;

    struct Residuals {
        double pi = 0.0;       // worst of the five defining relations
        double sylvester = 0.0;
        double chain = 0.0;
        double last_row = 0.0;
    } residuals;
};

/// Compose the Lemma-4 construction, the characteristic polynomial of S, the
/// block-exact cascade matrix, and the steady-state Sylvester maps.
/// K_applied is the gain as applied in feedback (u = K_applied * state).
/// When x0_data is given, M_rho is matched to the offline experiment's
/// transverse initial state rho(0) = x0_data; otherwise the canonical
/// rho(0) = T_rho^{-1} 1_n normalization is used.
OracleBundle build_oracle(const model::LtiPlant& plant, const model::Exosystem& exo,
                          const model::FilterParams& fp, const Eigen::VectorXd& theta,
                          const Eigen::RowVectorXd& K_applied,
                          const std::optional<Eigen::VectorXd>& x0_data = std::nullopt);

/// M_rho such that C exp((A - Pi1 L C) t) rho0 = M_rho exp(Lambda_F t) 1_n.
Eigen::RowVectorXd m_rho_for_initial_state(const model::LtiPlant& plant,
                                           const Eigen::MatrixXd& Pi1,
                                           const model::FilterParams& fp,
                                           const Eigen::VectorXd& rho0);

/// Exact cascade matrix [[Phi(theta), G calC],[0, calA]] from the Lemma-4
/// solution.
Eigen::MatrixXd cascade_matrix(const synth::PiSolution& pi, const model::FilterParams& fp,
                               const Eigen::VectorXd& theta);

/// Filter-cascade block calA = [[Lambda_F + L H1, L H2],[0, Lambda_F]].
Eigen::MatrixXd cascade_block(const synth::PiSolution& pi, const model::FilterParams& fp);

struct DecayReport {
    double fitted_rate = 0.0;   // from a log-linear fit of |rho(t)|
    double expected_rate = 0.0; // min |lambda_i| of Lambda_F
    double final_norm = 0.0;
};

/// Simulate rho' = (A - Pi1 L C) rho and fit the exponential decay rate.
DecayReport transverse_decay(const model::LtiPlant& plant, const model::FilterParams& fp,
                             const Eigen::MatrixXd& Pi1, const Eigen::VectorXd& rho0,
                             double T);

} // namespace regulab::oracle
