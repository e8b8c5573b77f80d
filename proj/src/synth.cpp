#include "regulab/synth.hpp"

#include "regulab/errors.hpp"
#include "regulab/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

namespace regulab::synth {

CascadeConstants CascadeConstants::make(const model::FilterParams& fp, int d)
{
    fp.validate();
    if (d < 1)
        throw ConfigError("CascadeConstants: d must be positive");
    CascadeConstants cc;
    cc.n = fp.n();
    cc.d = d;
    cc.calBc = Eigen::VectorXd::Zero(d + 2 * cc.n);
    cc.calBc.tail(cc.n) = fp.L;
    cc.calD = Eigen::VectorXd::Zero(d + 2 * cc.n);
    cc.calD(d - 1) = 1.0; // G = (0,...,0,1)
    cc.calD.segment(d, cc.n) = fp.L;
    cc.lambda = fp.lambda;
    return cc;
}

Eigen::MatrixXd CascadeConstants::An_theta(const Eigen::VectorXd& theta) const
{
    if (theta.size() != d)
        throw ConfigError("An_theta: theta dimension mismatch");
    Eigen::MatrixXd An = Eigen::MatrixXd::Zero(dim(), dim());
    An.topLeftCorner(d, d) = model::companion(theta);
    An.block(d, d, n, n) = lambda.asDiagonal();
    An.block(d + n, d + n, n, n) = lambda.asDiagonal();
    return An;
}

namespace {

Eigen::MatrixXd an_theta(const model::FilterParams& fp, const Eigen::VectorXd& theta)
{
    return CascadeConstants::make(fp, static_cast<int>(theta.size())).An_theta(theta);
}

} // namespace

Eigen::MatrixXd estimate_H(const postproc::DataMatrices& dm, const Eigen::VectorXd& theta,
                           const model::FilterParams& fp, double pinv_rel_tol)
{
    const int n = dm.n;
    const int d = dm.d;
    if (theta.size() != d || fp.n() != n)
        throw ConfigError("estimate_H: dimension mismatch with the data matrices");

    const postproc::ExcitationReport exc = postproc::excitation_rank(dm);
    if (!exc.satisfied)
        throw AssumptionError("estimate_H: rank [Z_zeta; X] = " + std::to_string(exc.rank) +
                              " < 3n = " + std::to_string(3 * n) +
                              "; the excitation condition of Assumption 7 fails");

    const Eigen::Index K = dm.columns();
    Eigen::MatrixXd Z(d + 2 * n, K), Zp(d + 2 * n, K);
    Z << dm.Z_eta, dm.Z_zeta;
    Zp << dm.Z_eta_plus, dm.Z_zeta_plus;

    const CascadeConstants cc = CascadeConstants::make(fp, d);
    const Eigen::MatrixXd An = an_theta(fp, theta);
    const Eigen::MatrixXd W = Zp - An * Z - cc.calBc * dm.U;

    Eigen::MatrixXd stacked(3 * n, K);
    stacked << dm.Z_zeta, dm.X;
    const Eigen::MatrixXd full = W * linalg::pinv(stacked, pinv_rel_tol);
    return full.leftCols(2 * n);
}

Eigen::MatrixXd assemble_Ahat(const Eigen::MatrixXd& H_hat, const Eigen::VectorXd& theta,
                              const model::FilterParams& fp)
{
    const int n = fp.n();
    const auto d = static_cast<int>(theta.size());
    if (H_hat.rows() != d + 2 * n || H_hat.cols() != 2 * n)
        throw ConfigError("assemble_Ahat: H_hat must be (d+2n) x 2n");
    Eigen::MatrixXd Ahat = an_theta(fp, theta);
    Ahat.rightCols(2 * n) += H_hat;
    return Ahat;
}

GainResult stabilizing_gain(const Eigen::MatrixXd& A_hat, const Eigen::VectorXd& calBc,
                            const Eigen::MatrixXd& Q, double R)
{
    const Eigen::Index m = A_hat.rows();
    if (A_hat.cols() != m || calBc.size() != m || Q.rows() != m || Q.cols() != m)
        throw ConfigError("stabilizing_gain: dimension mismatch");
    if (!(R > 0.0))
        throw ConfigError("stabilizing_gain: R must be positive");

    // PBH over the closed right half-plane eigenvalues of A_hat.
    const Eigen::MatrixXcd Ac = A_hat.cast<std::complex<double>>();
    for (const auto& lam : linalg::eigenvalues(A_hat)) {
        if (lam.real() < -1e-9)
            continue;
        Eigen::MatrixXcd pencil(m, m + 1);
        pencil.leftCols(m) = Ac - lam * Eigen::MatrixXcd::Identity(m, m);
        pencil.col(m) = calBc.cast<std::complex<double>>();
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(pencil);
        const auto& sv = svd.singularValues();
        if (!(sv(sv.size() - 1) > 1e-10 * sv(0)))
            throw NumericError(
                "stabilizing_gain: (A_hat, calBc) is not stabilizable at eigenvalue Re = " +
                std::to_string(lam.real()) + " (Lemma 6 hypothesis fails for this theta)");
    }

    Eigen::MatrixXd Rm(1, 1);
    Rm(0, 0) = R;
    const linalg::CareResult care = linalg::solve_care(A_hat, calBc, Q, Rm);

    GainResult out;
    out.P = care.P;
    out.K = care.K.row(0);
    out.care_residual = care.residual;
    out.closed_loop_margin = -linalg::spectral_abscissa(A_hat - calBc * out.K);
    if (!(out.closed_loop_margin > 0.0))
        throw NumericError("stabilizing_gain: closed loop is not Hurwitz (margin = " +
                           std::to_string(out.closed_loop_margin) + ")");
    return out;
}

SynthesisResult synthesize(const postproc::DataMatrices& dm, const Eigen::VectorXd& theta,
                           const model::FilterParams& fp, const Eigen::MatrixXd& Q,
                           double R, double pinv_rel_tol)
{
    SynthesisResult res;
    res.H_hat = estimate_H(dm, theta, fp, pinv_rel_tol);
    res.A_hat = assemble_Ahat(res.H_hat, theta, fp);
    const CascadeConstants cc = CascadeConstants::make(fp, static_cast<int>(theta.size()));
    const GainResult g = stabilizing_gain(res.A_hat, cc.calBc, Q, R);
    res.P = g.P;
    res.K = g.K;
    res.Q_used = Q;
    res.R_used = R;
    res.care_residual = g.care_residual;
    res.closed_loop_margin = g.closed_loop_margin;
    return res;
}

namespace {

// Observer gain placing sigma(A - G C) at the filter eigenvalues
// (Ackermann on the dual pair; fine at these state dimensions).
Eigen::VectorXd place_observer(const model::LtiPlant& plant, const Eigen::VectorXd& lambda)
{
    const int n = plant.n;
    Eigen::MatrixXd obsv(n, n);
    Eigen::RowVectorXd row = plant.C;
    for (int i = 0; i < n; ++i) {
        obsv.row(i) = row;
        row = row * plant.A;
    }
    if (linalg::numerical_rank(obsv).rank != n)
        throw AssumptionError("solve_pi: (C, A) is not observable (Assumption 1 fails)");

    // Desired monic polynomial with roots lambda_i.
    Eigen::VectorXd coef = Eigen::VectorXd::Zero(n + 1);
    coef(0) = 1.0; // descending powers: coef(0) l^n + ... + coef(n)
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd next = Eigen::VectorXd::Zero(n + 1);
        for (int j = 0; j <= i; ++j) {
            next(j) += coef(j);
            next(j + 1) -= lambda(i) * coef(j);
        }
        coef = next;
    }
    Eigen::MatrixXd pA = Eigen::MatrixXd::Zero(n, n);
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    for (int j = 0; j <= n; ++j)
        pA = pA * plant.A + coef(j) * I;

    Eigen::VectorXd en = Eigen::VectorXd::Zero(n);
    en(n - 1) = 1.0;
    const Eigen::VectorXd z = obsv.fullPivLu().solve(en);
    return pA * z;
}

// Real eigenvectors of M (assumed diagonalizable with the given real
// spectrum), matched to the order of `lambda`, unit norm, largest-magnitude
// component positive.
Eigen::MatrixXd matched_eigvecs(const Eigen::MatrixXd& M, const Eigen::VectorXd& lambda)
{
    const Eigen::Index n = M.rows();
    Eigen::EigenSolver<Eigen::MatrixXd> es(M);
    if (es.info() != Eigen::Success)
        throw NumericError("solve_pi: eigendecomposition failed");
    const auto& ev = es.eigenvalues();
    const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
    Eigen::MatrixXd Qv(n, n);
    std::vector<bool> used(static_cast<size_t>(n), false);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index best = -1;
        double best_dist = 1e300;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (used[static_cast<size_t>(j)])
                continue;
            const double dist = std::abs(ev(j) - std::complex<double>(lambda(i), 0.0));
            if (dist < best_dist) {
                best_dist = dist;
                best = j;
            }
        }
        if (best < 0 || best_dist > 1e-6 * scale)
            throw NumericError("solve_pi: placed spectrum does not match the filter spectrum");
        used[static_cast<size_t>(best)] = true;
        Eigen::VectorXd q = es.eigenvectors().col(best).real();
        const double nrm = q.norm();
        if (nrm == 0.0)
            throw NumericError("solve_pi: degenerate eigenvector");
        q /= nrm;
        Eigen::Index imax;
        q.cwiseAbs().maxCoeff(&imax);
        if (q(imax) < 0.0)
            q = -q;
        Qv.col(i) = q;
    }
    return Qv;
}

} // namespace

PiSolution solve_pi(const model::LtiPlant& plant, const model::FilterParams& fp)
{
    plant.validate();
    fp.validate();
    if (fp.n() != plant.n)
        throw ConfigError("solve_pi: filter order must equal the plant order");
    const int n = plant.n;

    const Eigen::VectorXd G = place_observer(plant, fp.lambda);
    const Eigen::MatrixXd Ao = plant.A - G * plant.C;
    const Eigen::MatrixXd Qv = matched_eigvecs(Ao, fp.lambda);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(Qv);
    if (!lu.isInvertible())
        throw NumericError("solve_pi: eigenvector basis is singular");
    const Eigen::MatrixXd Qinv = lu.inverse();

    // Pi F = Ao Pi with F = Lambda_F forces Pi e_i parallel to the i-th
    // eigenvector; the column scales come from the L-constraints.
    const Eigen::VectorXd c1 = (Qinv * G).cwiseQuotient(fp.L);
    const Eigen::VectorXd c2 = (Qinv * plant.B).cwiseQuotient(fp.L);

    PiSolution sol;
    sol.Pi1 = Qv * c1.asDiagonal();
    sol.Pi2 = Qv * c2.asDiagonal();
    sol.H1 = plant.C * sol.Pi1;
    sol.H2 = plant.C * sol.Pi2;
    sol.observer_gain = G;
    sol.eigvecs = Qv;

    const Eigen::MatrixXd F = fp.Lambda();
    const Eigen::MatrixXd Ao1 = plant.A - sol.Pi1 * fp.L * plant.C;
    double r = (sol.Pi1 * F - Ao1 * sol.Pi1).cwiseAbs().maxCoeff();
    r = std::max(r, (sol.Pi2 * F - Ao1 * sol.Pi2).cwiseAbs().maxCoeff());
    r = std::max(r, (sol.Pi2 * fp.L - plant.B).cwiseAbs().maxCoeff());
    r = std::max(r, (sol.H1 - plant.C * sol.Pi1).cwiseAbs().maxCoeff());
    r = std::max(r, (sol.H2 - plant.C * sol.Pi2).cwiseAbs().maxCoeff());
    sol.max_residual = r;
    const double scale = std::max({1.0, plant.A.cwiseAbs().maxCoeff(),
                                   sol.Pi1.cwiseAbs().maxCoeff(),
                                   sol.Pi2.cwiseAbs().maxCoeff()});
    if (!(r < 1e-6 * scale))
        throw NumericError("solve_pi: construction residual " + std::to_string(r) +
                           " too large");

    Eigen::MatrixXd stacked(n, 2 * n);
    stacked << sol.Pi1, sol.Pi2;
    if (linalg::numerical_rank(stacked).rank != n)
        throw NumericError("solve_pi: [Pi1 Pi2] is rank deficient");
    return sol;
}

MRhoSolution solve_m_rho(const model::LtiPlant& plant, const Eigen::MatrixXd& Pi1,
                         const model::FilterParams& fp)
{
    plant.validate();
    const Eigen::MatrixXd Ao = plant.A - Pi1 * fp.L * plant.C;
    const Eigen::MatrixXd Qv = matched_eigvecs(Ao, fp.lambda);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(Qv);
    if (!lu.isInvertible())
        throw NumericError("solve_m_rho: diagonalization failed");
    MRhoSolution sol;
    sol.T_rho = lu.inverse(); // Lambda_F = T_rho Ao T_rho^{-1}
    sol.M_rho = plant.C * Qv;
    return sol;
}

Eigen::MatrixXd PsiSolution::Psi() const
{
    const Eigen::Index d = Psi_eta.rows();
    const Eigen::Index n = Psi_zeta_e.rows();
    Eigen::MatrixXd full(d + 2 * n, Psi_eta.cols());
    full << Psi_eta, Psi_zeta_e, Psi_zeta_u;
    return full;
}

PsiSolution sylvester_psi(const model::LtiPlant& plant, const model::Exosystem& exo,
                          const model::FilterParams& fp, const Eigen::VectorXd& theta,
                          const Eigen::RowVectorXd& K_applied)
{
    exo.validate();
    const int n = plant.n;
    const auto d = static_cast<int>(theta.size());
    if (exo.d != d)
        throw ConfigError("sylvester_psi: theta dimension must match the exosystem order");
    if (K_applied.size() != d + 2 * n)
        throw ConfigError("sylvester_psi: gain must have length d + 2n");

    const PiSolution pi = solve_pi(plant, fp);
    const Eigen::MatrixXd Ao = plant.A - pi.Pi1 * fp.L * plant.C;
    const Eigen::MatrixXd Id = Eigen::MatrixXd::Identity(d, d);
    const Eigen::MatrixXd In = Eigen::MatrixXd::Identity(n, n);

    // Transverse block: Psi_rho S = Ao Psi_rho + Pi1 L C_r.
    const Eigen::MatrixXd lhs_rho =
        linalg::kron(exo.S.transpose(), In) - linalg::kron(Id, Ao);
    const Eigen::MatrixXd F_rho = pi.Pi1 * fp.L * exo.C_r;
    if (linalg::numerical_rank(lhs_rho, 1e-10).rank < lhs_rho.rows())
        throw NumericError("sylvester_psi: sigma(A - Pi1 L C) meets sigma(S) (resonance)");
    Eigen::FullPivLU<Eigen::MatrixXd> lu_rho(lhs_rho);
    const Eigen::VectorXd vec_rho =
        lu_rho.solve(Eigen::Map<const Eigen::VectorXd>(F_rho.data(), F_rho.size()));
    PsiSolution sol;
    sol.Psi_rho = Eigen::Map<const Eigen::MatrixXd>(vec_rho.data(), n, d);

    // Coupled block for col(Psi_eta, Psi_zeta_e, Psi_zeta_u):
    //   Psi S = A_cl Psi + forcing(Psi_rho, C_r)
    // with A_cl the closed-loop matrix of the (eta_e, zeta_e, zeta_u) states.
    const Eigen::Index m = d + 2 * n;
    const Eigen::MatrixXd Phi = model::companion(theta);
    Eigen::VectorXd G = Eigen::VectorXd::Zero(d);
    G(d - 1) = 1.0;
    const Eigen::RowVectorXd K_eta = K_applied.head(d);
    const Eigen::RowVectorXd K_ze = K_applied.segment(d, n);
    const Eigen::RowVectorXd K_zu = K_applied.tail(n);

    Eigen::MatrixXd Acl = Eigen::MatrixXd::Zero(m, m);
    Acl.topLeftCorner(d, d) = Phi;
    Acl.block(0, d, d, n) = G * pi.H1;
    Acl.block(0, d + n, d, n) = G * pi.H2;
    Acl.block(d, d, n, n) = fp.Lambda() + fp.L * pi.H1;
    Acl.block(d, d + n, n, n) = fp.L * pi.H2;
    Acl.block(d + n, 0, n, d) = fp.L * K_eta;
    Acl.block(d + n, d, n, n) = fp.L * K_ze;
    Acl.block(d + n, d + n, n, n) = fp.Lambda() + fp.L * K_zu;

    const Eigen::RowVectorXd err_row = plant.C * sol.Psi_rho - exo.C_r;
    Eigen::MatrixXd Frc = Eigen::MatrixXd::Zero(m, d);
    Frc.topRows(d) = G * err_row;
    Frc.block(d, 0, n, d) = fp.L * err_row;

    const Eigen::MatrixXd lhs =
        linalg::kron(exo.S.transpose(), Eigen::MatrixXd::Identity(m, m)) -
        linalg::kron(Id, Acl);
    if (linalg::numerical_rank(lhs, 1e-10).rank < lhs.rows())
        throw NumericError("sylvester_psi: closed-loop spectrum meets sigma(S) (resonance)");
    Eigen::FullPivLU<Eigen::MatrixXd> lu(lhs);
    const Eigen::VectorXd vec =
        lu.solve(Eigen::Map<const Eigen::VectorXd>(Frc.data(), Frc.size()));
    const Eigen::MatrixXd Psi = Eigen::Map<const Eigen::MatrixXd>(vec.data(), m, d);
    sol.Psi_eta = Psi.topRows(d);
    sol.Psi_zeta_e = Psi.block(d, 0, n, d);
    sol.Psi_zeta_u = Psi.bottomRows(n);

    // Residuals of the four defining relations.
    sol.residual_rho =
        (sol.Psi_rho * exo.S - Ao * sol.Psi_rho - F_rho).cwiseAbs().maxCoeff();
    const Eigen::MatrixXd full_res = Psi * exo.S - Acl * Psi - Frc;
    sol.residual_eta = full_res.topRows(d).cwiseAbs().maxCoeff();
    sol.residual_zeta_e = full_res.block(d, 0, n, d).cwiseAbs().maxCoeff();
    sol.residual_zeta_u = full_res.bottomRows(n).cwiseAbs().maxCoeff();

    // Companion-structure identities: Psi_eta_i S = Psi_eta_{i+1} and the
    // last row against C Psi_x - C_r.
    double chain = 0.0;
    for (int i = 0; i + 1 < d; ++i)
        chain = std::max(chain, (sol.Psi_eta.row(i) * exo.S - sol.Psi_eta.row(i + 1))
                                    .cwiseAbs()
                                    .maxCoeff());
    sol.residual_chain = chain;
    const Eigen::RowVectorXd CPsi_x =
        plant.C * sol.Psi_rho + pi.H1 * sol.Psi_zeta_e + pi.H2 * sol.Psi_zeta_u;
    Eigen::RowVectorXd last = sol.Psi_eta.row(d - 1) * exo.S;
    for (int i = 0; i < d; ++i)
        last += theta(i) * sol.Psi_eta.row(i);
    sol.residual_last_row = (last - (CPsi_x - exo.C_r)).cwiseAbs().maxCoeff();
    return sol;
}

} // namespace regulab::synth
