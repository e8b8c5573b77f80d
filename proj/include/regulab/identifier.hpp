#pragma once

#include "regulab/model.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace regulab::ident {

/// One regression pair collected at a jump: alpha is the internal-model state
/// eta_e at the jump instant, beta the scalar regressand formed from the
/// parameter active when the pair was sampled.
struct RegressionSample {
    Eigen::VectorXd alpha;
    double beta = 0.0;
};

/// Discrete-time identifier state (R, v, theta) with forgetting factor mu
/// and box projection. R stays symmetric PSD by construction.
struct IdentifierState {
    Eigen::MatrixXd R;
    Eigen::VectorXd v;
    Eigen::VectorXd theta;
    double mu = 0.0;
    model::ThetaBox box;
    long jump_count = 0;

    static IdentifierState make(const Eigen::VectorXd& theta0, double mu,
                                const model::ThetaBox& box);
};

/// Componentwise clamp onto [lo, hi] (Euclidean projection onto the box).
Eigen::VectorXd project_box(const Eigen::VectorXd& theta_raw, const model::ThetaBox& box);

/// One identifier jump:
///   R+ = mu R + alpha alpha^T, v+ = mu v + alpha beta,
///   theta+ = project(pinv(R+) v+).
IdentifierState jump(const IdentifierState& state, const RegressionSample& sample);

/// Minimum eigenvalue of sum_{i=j-J}^{j-1} mu^{j-i-1} alpha_i alpha_i^T over
/// the trailing window of length J. Returns nullopt when the history is
/// shorter than J (not yet assessable).
std::optional<double> pe_metric(const std::vector<RegressionSample>& history,
                                double mu, int J);

/// Exponentially discounted prediction-error cost
/// sum_i mu^{j-i-1} (beta_i - theta^T alpha_i)^2. Diagnostic only.
double cost_J(const std::vector<RegressionSample>& history, double mu,
              const Eigen::VectorXd& theta);

} // namespace regulab::ident
