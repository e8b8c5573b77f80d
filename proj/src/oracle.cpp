#include "regulab/oracle.hpp"

#include "regulab/errors.hpp"
#include "regulab/linalg.hpp"
#include "regulab/sim.hpp"

#include <algorithm>
#include <cmath>

namespace regulab::oracle {

Eigen::MatrixXd cascade_block(const synth::PiSolution& pi, const model::FilterParams& fp)
{
    const int n = fp.n();
    Eigen::MatrixXd calA = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    calA.topLeftCorner(n, n) = fp.Lambda() + fp.L * pi.H1;
    calA.topRightCorner(n, n) = fp.L * pi.H2;
    calA.bottomRightCorner(n, n) = fp.Lambda();
    return calA;
}

Eigen::MatrixXd cascade_matrix(const synth::PiSolution& pi, const model::FilterParams& fp,
                               const Eigen::VectorXd& theta)
{
    const int n = fp.n();
    const auto d = static_cast<int>(theta.size());
    Eigen::MatrixXd Ac = Eigen::MatrixXd::Zero(d + 2 * n, d + 2 * n);
    Ac.topLeftCorner(d, d) = model::companion(theta);
    Eigen::VectorXd G = Eigen::VectorXd::Zero(d);
    G(d - 1) = 1.0;
    Eigen::RowVectorXd calC(2 * n);
    calC << pi.H1, pi.H2;
    Ac.topRightCorner(d, 2 * n) = G * calC;
    Ac.bottomRightCorner(2 * n, 2 * n) = cascade_block(pi, fp);
    return Ac;
}

Eigen::RowVectorXd m_rho_for_initial_state(const model::LtiPlant& plant,
                                           const Eigen::MatrixXd& Pi1,
                                           const model::FilterParams& fp,
                                           const Eigen::VectorXd& rho0)
{
    const synth::MRhoSolution canon = synth::solve_m_rho(plant, Pi1, fp);
    // rho(t) = Q exp(Lambda_F t) Q^{-1} rho0 with Q = T_rho^{-1}, so the
    // coefficient against exp(lambda_i t) is (C Q)_i (Q^{-1} rho0)_i.
    const Eigen::VectorXd modal = canon.T_rho * rho0;
    return canon.M_rho.cwiseProduct(modal.transpose());
}

OracleBundle build_oracle(const model::LtiPlant& plant, const model::Exosystem& exo,
                          const model::FilterParams& fp, const Eigen::VectorXd& theta,
                          const Eigen::RowVectorXd& K_applied,
                          const std::optional<Eigen::VectorXd>& x0_data)
{
    OracleBundle b;
    const synth::PiSolution pi = synth::solve_pi(plant, fp);
    b.Pi1 = pi.Pi1;
    b.Pi2 = pi.Pi2;
    b.H1 = pi.H1;
    b.H2 = pi.H2;
    b.residuals.pi = pi.max_residual;

    if (x0_data.has_value())
        b.M_rho = m_rho_for_initial_state(plant, pi.Pi1, fp, *x0_data);
    else
        b.M_rho = synth::solve_m_rho(plant, pi.Pi1, fp).M_rho;

    b.theta_star = model::char_poly_theta(exo.S);
    b.calA = cascade_block(pi, fp);
    b.calC.resize(2 * fp.n());
    b.calC << pi.H1, pi.H2;
    b.Ac_theta = cascade_matrix(pi, fp, theta);

    b.psi_detail = synth::sylvester_psi(plant, exo, fp, theta, K_applied);
    b.Psi = b.psi_detail.Psi();
    b.residuals.sylvester = std::max({b.psi_detail.residual_rho, b.psi_detail.residual_eta,
                                      b.psi_detail.residual_zeta_e,
                                      b.psi_detail.residual_zeta_u});
    b.residuals.chain = b.psi_detail.residual_chain;
    b.residuals.last_row = b.psi_detail.residual_last_row;
    return b;
}

DecayReport transverse_decay(const model::LtiPlant& plant, const model::FilterParams& fp,
                             const Eigen::MatrixXd& Pi1, const Eigen::VectorXd& rho0,
                             double T)
{
    const Eigen::MatrixXd Ao = plant.A - Pi1 * fp.L * plant.C;
    const sim::VectorField f = [&](double, const Eigen::VectorXd& r) {
        return Eigen::VectorXd(Ao * r);
    };
    DecayReport rep;
    rep.expected_rate = fp.lambda.cwiseAbs().minCoeff();
    if (rho0.norm() == 0.0)
        return rep; // identically zero trajectory, nothing to fit

    const sim::Trajectory traj = sim::rk4_integrate(f, rho0, 0.0, T, 1e-3);
    // Log-linear fit of |rho(t)| over the tail half, where the slowest mode
    // dominates.
    std::vector<double> ts, logn;
    for (Eigen::Index i = traj.steps() / 2; i < traj.steps(); ++i) {
        const double nrm = traj.x.row(i).norm();
        if (nrm <= 0.0)
            continue;
        ts.push_back(traj.t[static_cast<size_t>(i)]);
        logn.push_back(std::log(nrm));
    }
    if (ts.size() < 2)
        throw NumericError("transverse_decay: trajectory underflowed before the fit window");
    double st = 0, sl = 0, stt = 0, stl = 0;
    const auto N = static_cast<double>(ts.size());
    for (size_t i = 0; i < ts.size(); ++i) {
        st += ts[i];
        sl += logn[i];
        stt += ts[i] * ts[i];
        stl += ts[i] * logn[i];
    }
    const double slope = (N * stl - st * sl) / (N * stt - st * st);
    rep.fitted_rate = -slope;
    rep.final_norm = traj.x.row(traj.steps() - 1).norm();
    return rep;
}

} // namespace regulab::oracle
