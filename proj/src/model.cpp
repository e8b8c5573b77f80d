#include "regulab/model.hpp"

#include "regulab/errors.hpp"
#include "regulab/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace regulab::model {

void LtiPlant::validate() const
{
    if (n <= 0)
        throw ConfigError("LtiPlant: n must be positive");
    if (A.rows() != n || A.cols() != n)
        throw ConfigError("LtiPlant: A must be n x n");
    if (B.size() != n)
        throw ConfigError("LtiPlant: B must have length n");
    if (C.size() != n)
        throw ConfigError("LtiPlant: C must have length n");
}

void Exosystem::validate() const
{
    if (d <= 0)
        throw ConfigError("Exosystem: d must be positive");
    if (S.rows() != d || S.cols() != d)
        throw ConfigError("Exosystem: S must be d x d");
    if (C_r.size() != d)
        throw ConfigError("Exosystem: C_r must have length d");
    if (w0.size() != d)
        throw ConfigError("Exosystem: w0 must have length d");
}

bool Exosystem::spectrum_admissible(double tol) const
{
    const auto ev = linalg::eigenvalues(S);
    const double scale = std::max(1.0, S.cwiseAbs().maxCoeff());
    for (size_t i = 0; i < ev.size(); ++i) {
        if (std::abs(ev[i].real()) > tol * scale)
            return false;
        for (size_t j = i + 1; j < ev.size(); ++j)
            if (std::abs(ev[i] - ev[j]) < tol * scale)
                return false;
    }
    return true;
}

void ThetaBox::validate() const
{
    if (lo.size() == 0 || lo.size() != hi.size())
        throw ConfigError("ThetaBox: lo and hi must be nonempty and equally sized");
    if ((lo.array() > hi.array()).any())
        throw ConfigError("ThetaBox: lo must not exceed hi componentwise");
}

bool ThetaBox::contains(const Eigen::VectorXd& theta, double slack) const
{
    if (theta.size() != lo.size())
        return false;
    return (theta.array() >= lo.array() - slack).all() &&
           (theta.array() <= hi.array() + slack).all();
}

void FilterParams::validate() const
{
    if (lambda.size() == 0 || lambda.size() != L.size())
        throw ConfigError("FilterParams: lambda and L must be nonempty and equally sized");
    for (int i = 0; i < n(); ++i) {
        if (!(lambda(i) < 0.0))
            throw ConfigError("FilterParams: filter eigenvalues must be strictly negative");
        if (L(i) == 0.0)
            throw ConfigError("FilterParams: entries of L must be nonzero");
        for (int j = i + 1; j < n(); ++j)
            if (lambda(i) == lambda(j))
                throw ConfigError("FilterParams: filter eigenvalues must be pairwise distinct");
    }
}

Eigen::MatrixXd companion(const Eigen::VectorXd& theta)
{
    const Eigen::Index d = theta.size();
    if (d < 1)
        throw ConfigError("companion: theta must be nonempty");
    Eigen::MatrixXd Phi = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index i = 0; i + 1 < d; ++i)
        Phi(i, i + 1) = 1.0;
    Phi.row(d - 1) = -theta.transpose();
    return Phi;
}

Eigen::VectorXd char_poly_theta(const Eigen::MatrixXd& S)
{
    const Eigen::Index d = S.rows();
    if (S.cols() != d)
        throw ConfigError("char_poly_theta: S must be square");
    // Coefficients of det(lI - S) by the Faddeev-LeVerrier recursion:
    // monic l^d + c_{d-1} l^{d-1} + ... + c_0, theta_i = c_{i-1}.
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd c(d);
    Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
    double ck = 1.0;
    for (Eigen::Index k = 1; k <= d; ++k) {
        M = S * M + ck * I;
        ck = -(S * M).trace() / static_cast<double>(k);
        c(d - k) = ck;
    }
    return c;
}

std::vector<std::complex<double>> poly_roots(const Eigen::VectorXd& theta)
{
    if (theta.size() == 0)
        return {};
    return linalg::eigenvalues(companion(theta));
}

StructureReport check_structure(const LtiPlant& plant, double rel_tol)
{
    plant.validate();
    const int n = plant.n;
    Eigen::MatrixXd ctrb(n, n), obsv(n, n);
    Eigen::VectorXd col = plant.B;
    Eigen::RowVectorXd row = plant.C;
    for (int i = 0; i < n; ++i) {
        ctrb.col(i) = col;
        obsv.row(i) = row;
        col = plant.A * col;
        row = row * plant.A;
    }
    StructureReport rep;
    rep.controllable = linalg::numerical_rank(ctrb, rel_tol).rank == n;
    rep.observable = linalg::numerical_rank(obsv, rel_tol).rank == n;
    return rep;
}

namespace {

bool rosenbrock_full_rank(const Eigen::MatrixXcd& A, const Eigen::VectorXcd& B,
                          const Eigen::RowVectorXcd& C, std::complex<double> lambda,
                          double rel_tol)
{
    const Eigen::Index n = A.rows();
    Eigen::MatrixXcd R = Eigen::MatrixXcd::Zero(n + 1, n + 1);
    R.topLeftCorner(n, n) = A - lambda * Eigen::MatrixXcd::Identity(n, n);
    R.block(0, n, n, 1) = B;
    R.block(n, 0, 1, n) = C;
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(R);
    const auto& sv = svd.singularValues();
    return sv(sv.size() - 1) > rel_tol * sv(0);
}

} // namespace

bool pbh_nonresonance(const LtiPlant& plant, const Eigen::VectorXd& theta, double rel_tol)
{
    plant.validate();
    if (theta.size() == 0)
        return true; // no roots to test
    const Eigen::MatrixXcd A = plant.A.cast<std::complex<double>>();
    const Eigen::VectorXcd B = plant.B.cast<std::complex<double>>();
    const Eigen::RowVectorXcd C = plant.C.cast<std::complex<double>>();
    for (const auto& root : poly_roots(theta))
        if (!rosenbrock_full_rank(A, B, C, root, rel_tol))
            return false;
    return true;
}

bool pbh_cascade(const Eigen::MatrixXd& calA, const Eigen::VectorXd& calB,
                 const Eigen::RowVectorXd& calC, const Eigen::VectorXd& theta,
                 double rel_tol)
{
    if (calA.rows() != calA.cols() || calB.size() != calA.rows() || calC.size() != calA.rows())
        throw ConfigError("pbh_cascade: dimension mismatch");
    if (theta.size() == 0)
        return true;
    const Eigen::MatrixXcd A = calA.cast<std::complex<double>>();
    const Eigen::VectorXcd B = calB.cast<std::complex<double>>();
    const Eigen::RowVectorXcd C = calC.cast<std::complex<double>>();
    for (const auto& root : poly_roots(theta))
        if (!rosenbrock_full_rank(A, B, C, root, rel_tol))
            return false;
    return true;
}

bool is_hurwitz(const Eigen::MatrixXd& M, double margin)
{
    if (M.rows() != M.cols())
        throw ConfigError("is_hurwitz: matrix must be square");
    return linalg::spectral_abscissa(M) < -margin;
}

} // namespace regulab::model
