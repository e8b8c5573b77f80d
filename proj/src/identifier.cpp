#include "regulab/identifier.hpp"

#include "regulab/errors.hpp"
#include "regulab/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace regulab::ident {

IdentifierState IdentifierState::make(const Eigen::VectorXd& theta0, double mu,
                                      const model::ThetaBox& box)
{
    box.validate();
    if (!(mu > 0.0 && mu < 1.0))
        throw ConfigError("IdentifierState: mu must lie in (0,1)");
    if (theta0.size() != box.lo.size())
        throw ConfigError("IdentifierState: theta0 dimension must match the box");
    if (!box.contains(theta0))
        throw ConfigError("IdentifierState: theta0 must lie in the box");
    IdentifierState st;
    const Eigen::Index d = theta0.size();
    st.R = Eigen::MatrixXd::Zero(d, d);
    st.v = Eigen::VectorXd::Zero(d);
    st.theta = theta0;
    st.mu = mu;
    st.box = box;
    st.jump_count = 0;
    return st;
}

Eigen::VectorXd project_box(const Eigen::VectorXd& theta_raw, const model::ThetaBox& box)
{
    if (theta_raw.size() != box.lo.size())
        throw ConfigError("project_box: dimension mismatch");
    return theta_raw.cwiseMax(box.lo).cwiseMin(box.hi);
}

IdentifierState jump(const IdentifierState& state, const RegressionSample& sample)
{
    if (sample.alpha.size() != state.theta.size())
        throw ConfigError("identifier jump: alpha dimension mismatch");
    if (!sample.alpha.allFinite() || !std::isfinite(sample.beta))
        throw NumericError("identifier jump: non-finite regression sample");

    IdentifierState next = state;
    next.R = state.mu * state.R + sample.alpha * sample.alpha.transpose();
    next.R = 0.5 * (next.R + next.R.transpose());
    next.v = state.mu * state.v + sample.alpha * sample.beta;
    const Eigen::VectorXd raw = linalg::pinv(next.R, 1e-12) * next.v;
    next.theta = project_box(raw, state.box);
    next.jump_count = state.jump_count + 1;
    return next;
}

std::optional<double> pe_metric(const std::vector<RegressionSample>& history,
                                double mu, int J)
{
    if (J <= 0)
        throw ConfigError("pe_metric: window must be positive");
    const auto j = static_cast<long>(history.size());
    if (j < J)
        return std::nullopt;
    const Eigen::Index d = history.front().alpha.size();
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d, d);
    for (long i = j - J; i < j; ++i) {
        const auto& a = history[static_cast<size_t>(i)].alpha;
        gram += std::pow(mu, static_cast<double>(j - i - 1)) * (a * a.transpose());
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    return es.eigenvalues().minCoeff();
}

double cost_J(const std::vector<RegressionSample>& history, double mu,
              const Eigen::VectorXd& theta)
{
    const auto j = static_cast<long>(history.size());
    double cost = 0.0;
    for (long i = 0; i < j; ++i) {
        const auto& s = history[static_cast<size_t>(i)];
        const double eps = s.beta - theta.dot(s.alpha);
        cost += std::pow(mu, static_cast<double>(j - i - 1)) * eps * eps;
    }
    return cost;
}

} // namespace regulab::ident
