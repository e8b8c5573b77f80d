#include "regulab/linalg.hpp"

#include "regulab/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace regulab::linalg {

RankInfo numerical_rank(const Eigen::MatrixXd& M, double rel_tol)
{
    RankInfo info;
    if (M.size() == 0)
        return info;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    const auto& sv = svd.singularValues();
    info.sigma_max = sv(0);
    info.sigma_min = sv(sv.size() - 1);
    const double thresh = rel_tol * info.sigma_max;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > thresh)
            ++info.rank;
    return info;
}

Eigen::MatrixXd pinv(const Eigen::MatrixXd& M, double rel_tol)
{
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double thresh = sv.size() > 0 ? rel_tol * sv(0) : 0.0;
    Eigen::VectorXd inv_sv = Eigen::VectorXd::Zero(sv.size());
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        inv_sv(i) = sv(i) > thresh ? 1.0 / sv(i) : 0.0;
    return svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().transpose();
}

namespace {

// Taylor kernel for |A| <= ~0.25; 24 terms reach double precision.
Eigen::MatrixXd expm_taylor(const Eigen::MatrixXd& A)
{
    const Eigen::Index m = A.rows();
    Eigen::MatrixXd acc = Eigen::MatrixXd::Identity(m, m);
    Eigen::MatrixXd term = Eigen::MatrixXd::Identity(m, m);
    for (int j = 1; j <= 24; ++j) {
        term = (term * A) / static_cast<double>(j);
        acc += term;
        if (term.cwiseAbs().maxCoeff() < 1e-18 * acc.cwiseAbs().maxCoeff())
            break;
    }
    return acc;
}

} // namespace

Eigen::MatrixXd expm(const Eigen::MatrixXd& A)
{
    if (A.rows() != A.cols())
        throw std::invalid_argument("expm: matrix must be square");
    const double nrm = A.cwiseAbs().rowwise().sum().maxCoeff(); // infinity norm
    int s = 0;
    double scaled = nrm;
    while (scaled > 0.25) {
        scaled *= 0.5;
        ++s;
        if (s > 64)
            throw NumericError("expm: norm too large to scale");
    }
    Eigen::MatrixXd E = expm_taylor(A / std::pow(2.0, s));
    for (int i = 0; i < s; ++i)
        E = E * E;
    return E;
}

Eigen::MatrixXd phi_times(const Eigen::MatrixXd& A, const Eigen::VectorXd& c, int kmax)
{
    const Eigen::Index m = A.rows();
    if (A.cols() != m || c.size() != m)
        throw std::invalid_argument("phi_times: dimension mismatch");
    // exp([[A, c e1^T],[0, N]]) has phi_k(A) c in the k-th column of its
    // top-right block, N being the kmax x kmax upper shift.
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(m + kmax, m + kmax);
    W.topLeftCorner(m, m) = A;
    W.block(0, m, m, 1) = c;
    for (int i = 0; i < kmax - 1; ++i)
        W(m + i, m + i + 1) = 1.0;
    const Eigen::MatrixXd E = expm(W);
    return E.block(0, m, m, kmax);
}

Eigen::MatrixXd kron(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B)
{
    Eigen::MatrixXd K(A.rows() * B.rows(), A.cols() * B.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return K;
}

Eigen::MatrixXd lyap_transpose(const Eigen::MatrixXd& A, const Eigen::MatrixXd& W)
{
    const Eigen::Index m = A.rows();
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(m, m);
    // vec(A^T P) + vec(P A) = (I (x) A^T + A^T (x) I) vec(P)
    Eigen::MatrixXd lhs = kron(I, A.transpose()) + kron(A.transpose(), I);
    Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(W.data(), W.size());
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(lhs);
    Eigen::VectorXd p = lu.solve(w);
    if (!p.allFinite())
        throw NumericError("lyap_transpose: singular Lyapunov operator");
    Eigen::MatrixXd P = Eigen::Map<Eigen::MatrixXd>(p.data(), m, m);
    return 0.5 * (P + P.transpose());
}

double spectral_abscissa(const Eigen::MatrixXd& M)
{
    Eigen::EigenSolver<Eigen::MatrixXd> es(M, /*computeEigenvectors=*/false);
    return es.eigenvalues().real().maxCoeff();
}

std::vector<std::complex<double>> eigenvalues(const Eigen::MatrixXd& M)
{
    Eigen::EigenSolver<Eigen::MatrixXd> es(M, false);
    std::vector<std::complex<double>> out(static_cast<size_t>(M.rows()));
    for (Eigen::Index i = 0; i < M.rows(); ++i)
        out[static_cast<size_t>(i)] = es.eigenvalues()(i);
    return out;
}

namespace {

double care_residual_norm(const Eigen::MatrixXd& A, const Eigen::MatrixXd& G,
                          const Eigen::MatrixXd& Q, const Eigen::MatrixXd& P)
{
    Eigen::MatrixXd R = A.transpose() * P + P * A - P * G * P + Q;
    return R.cwiseAbs().maxCoeff();
}

} // namespace

CareResult solve_care(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                      const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R)
{
    const Eigen::Index m = A.rows();
    if (A.cols() != m || B.rows() != m || Q.rows() != m || Q.cols() != m ||
        R.rows() != B.cols() || R.cols() != B.cols())
        throw std::invalid_argument("solve_care: dimension mismatch");

    Eigen::LLT<Eigen::MatrixXd> Rchol(R);
    if (Rchol.info() != Eigen::Success)
        throw NumericError("solve_care: R must be positive definite");
    const Eigen::MatrixXd G = B * Rchol.solve(B.transpose());

    Eigen::MatrixXd H(2 * m, 2 * m);
    H << A, -G, -Q, -A.transpose();

    Eigen::EigenSolver<Eigen::MatrixXd> es(H);
    if (es.info() != Eigen::Success)
        throw NumericError("solve_care: Hamiltonian eigendecomposition failed");

    // Basis of the stable invariant subspace.
    Eigen::MatrixXcd basis(2 * m, 2 * m);
    Eigen::Index count = 0;
    for (Eigen::Index i = 0; i < 2 * m; ++i) {
        if (es.eigenvalues()(i).real() < 0.0)
            basis.col(count++) = es.eigenvectors().col(i);
    }
    if (count != m)
        throw NumericError("solve_care: Hamiltonian has " + std::to_string(count) +
                           " stable eigenvalues, expected " + std::to_string(m) +
                           " (is the pair stabilizable and (Q,A) detectable?)");

    const Eigen::MatrixXcd X1 = basis.topLeftCorner(m, m);
    const Eigen::MatrixXcd X2 = basis.block(m, 0, m, m);
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(X1);
    if (!lu.isInvertible())
        throw NumericError("solve_care: stable subspace is not a graph over the state space");
    Eigen::MatrixXd P = (X2 * lu.inverse()).real();
    P = 0.5 * (P + P.transpose());

    // Newton-Kleinman polish: P_{k+1} solves
    // (A - G P_k)^T P + P (A - G P_k) = -Q - P_k G P_k.
    CareResult out;
    out.newton_iters = 0;
    for (int it = 0; it < 25; ++it) {
        const Eigen::MatrixXd Acl = A - G * P;
        const Eigen::MatrixXd W = -(Q + P * G * P);
        Eigen::MatrixXd Pn = lyap_transpose(Acl, W);
        const double delta = (Pn - P).cwiseAbs().maxCoeff();
        const double scale = std::max(1.0, Pn.cwiseAbs().maxCoeff());
        P = Pn;
        ++out.newton_iters;
        if (delta < 1e-10 * scale)
            break;
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> pes(P);
    if (pes.eigenvalues().minCoeff() <= 0.0)
        throw NumericError("solve_care: solution P is not positive definite");

    out.P = P;
    out.K = Rchol.solve(B.transpose() * P);
    out.residual = care_residual_norm(A, G, Q, P);
    if (!(out.residual < 1e-6 * std::max(1.0, P.cwiseAbs().maxCoeff())))
        throw NumericError("solve_care: residual " + std::to_string(out.residual) +
                           " did not converge");
    return out;
}

} // namespace regulab::linalg
