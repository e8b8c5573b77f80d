#pragma once

#include "regulab/model.hpp"
#include "regulab/sim.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <complex>
#include <random>
#include <vector>

namespace fixtures {

using regulab::model::Exosystem;
using regulab::model::FilterParams;
using regulab::model::LtiPlant;
using regulab::model::ThetaBox;
using regulab::sim::ExcitationSpec;

// ---- experiment configuration used throughout the suite ----

inline LtiPlant plant3()
{
    LtiPlant p;
    p.n = 3;
    p.A.resize(3, 3);
    p.A << 1, 1, 1, -1, 0, 1, 1, 1, 0;
    p.B.resize(3);
    p.B << 0, 1, 2;
    p.C.resize(3);
    p.C << -1, 1, 0;
    return p;
}

inline Exosystem exo2()
{
    Exosystem e;
    e.d = 2;
    e.S.resize(2, 2);
    e.S << 0, -2, 2, 0;
    e.C_r.resize(2);
    e.C_r << -2.0, -50.0 / (M_PI * M_PI);
    e.w0 = Eigen::VectorXd::Ones(2);
    return e;
}

inline FilterParams filter3()
{
    FilterParams fp;
    fp.lambda.resize(3);
    fp.lambda << -1, -2, -3;
    fp.L.resize(3);
    fp.L << 1, 2, 3;
    return fp;
}

inline ExcitationSpec excitation4()
{
    ExcitationSpec spec;
    spec.amplitudes.resize(4);
    spec.amplitudes << 1, 2, 3, 4;
    spec.omega1 = 5.0;
    return spec;
}

inline ThetaBox box5()
{
    ThetaBox b;
    b.lo = Eigen::VectorXd::Constant(2, -5.0);
    b.hi = Eigen::VectorXd::Constant(2, 5.0);
    return b;
}

inline Eigen::VectorXd theta_star()
{
    Eigen::VectorXd t(2);
    t << 4.0, 0.0;
    return t;
}

inline Eigen::MatrixXd synthesis_Q(int d, int n, double eta_weight = 10.0)
{
    Eigen::VectorXd diag = Eigen::VectorXd::Ones(d + 2 * n);
    diag.head(d).setConstant(eta_weight);
    return Eigen::MatrixXd(diag.asDiagonal());
}

// ---- independent oracles ----

/// Matrix exponential through Eigen's Pade implementation: independent of
/// the library's scaled-Taylor path.
inline Eigen::MatrixXd expm_oracle(const Eigen::MatrixXd& A)
{
    return A.exp();
}

/// Aberth-Ehrlich iteration for the monic polynomial
/// l^d + theta_d l^{d-1} + ... + theta_1 (independent of any eigensolver).
inline std::vector<std::complex<double>> aberth_roots(const Eigen::VectorXd& theta)
{
    using C = std::complex<double>;
    const int d = static_cast<int>(theta.size());
    std::vector<C> coeff(static_cast<size_t>(d) + 1); // ascending powers
    for (int i = 0; i < d; ++i)
        coeff[static_cast<size_t>(i)] = theta(i);
    coeff[static_cast<size_t>(d)] = 1.0;

    const auto eval = [&](C z, C& deriv) {
        C p = coeff[static_cast<size_t>(d)];
        deriv = 0.0;
        for (int k = d - 1; k >= 0; --k) {
            deriv = deriv * z + p;
            p = p * z + coeff[static_cast<size_t>(k)];
        }
        return p;
    };

    double radius = 1.0;
    for (int i = 0; i < d; ++i)
        radius = std::max(radius, 2.0 * std::pow(std::abs(theta(i)), 1.0 / (d - i)));
    std::vector<C> z(static_cast<size_t>(d));
    for (int i = 0; i < d; ++i)
        z[static_cast<size_t>(i)] =
            radius * std::exp(C(0.0, 2.0 * M_PI * (i + 0.25) / d));

    for (int iter = 0; iter < 200; ++iter) {
        double move = 0.0;
        for (int i = 0; i < d; ++i) {
            C dp;
            const C p = eval(z[static_cast<size_t>(i)], dp);
            C ratio = p / dp;
            C sum = 0.0;
            for (int k = 0; k < d; ++k)
                if (k != i)
                    sum += 1.0 / (z[static_cast<size_t>(i)] - z[static_cast<size_t>(k)]);
            const C delta = ratio / (1.0 - ratio * sum);
            z[static_cast<size_t>(i)] -= delta;
            move = std::max(move, std::abs(delta));
        }
        if (move < 1e-14 * radius)
            break;
    }
    return z;
}

/// Cubic Hermite value at offset s in [0, dt] for nodes (y0, y1) with slopes
/// (d0, d1) -- mirrors the reconstruction the replay uses, so the quadrature
/// oracle integrates the same input signal.
inline double hermite_value(double y0, double y1, double d0, double d1, double dt, double s)
{
    const double a2 = (3.0 * (y1 - y0) / dt - 2.0 * d0 - d1) / dt;
    const double a3 = (2.0 * (y0 - y1) / dt + d0 + d1) / (dt * dt);
    return y0 + s * (d0 + s * (a2 + s * a3));
}

/// Variation-of-constants oracle: advance x' = M x + b s(t) across each grid
/// interval with 5-point Gauss-Legendre quadrature of exp(M (dt - s)) b s(s),
/// using Eigen's Pade exponential at the fixed quadrature offsets. Verifies
/// the library's phi-function stepping through an unrelated numerical route.
inline Eigen::MatrixXd convolution_oracle(const Eigen::MatrixXd& M, const Eigen::VectorXd& b,
                                          const Eigen::VectorXd& sig,
                                          const Eigen::VectorXd& dsig, double dt)
{
    static const double nodes[5] = {0.046910077030668, 0.230765344947158, 0.5,
                                    0.769234655052842, 0.953089922969332};
    static const double weights[5] = {0.118463442528095, 0.239314335249683,
                                      0.284444444444444, 0.239314335249683,
                                      0.118463442528095};
    const Eigen::Index m = M.rows();
    const Eigen::Index N = sig.size();
    const Eigen::MatrixXd E = expm_oracle(Eigen::MatrixXd(M * dt));
    std::vector<Eigen::VectorXd> kernel(5);
    for (int q = 0; q < 5; ++q)
        kernel[static_cast<size_t>(q)] =
            expm_oracle(Eigen::MatrixXd(M * (dt * (1.0 - nodes[q])))) * b;

    Eigen::MatrixXd out(N, m);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(m);
    out.row(0) = x.transpose();
    for (Eigen::Index i = 0; i + 1 < N; ++i) {
        Eigen::VectorXd integral = Eigen::VectorXd::Zero(m);
        for (int q = 0; q < 5; ++q) {
            const double s = dt * nodes[q];
            const double val =
                hermite_value(sig(i), sig(i + 1), dsig(i), dsig(i + 1), dt, s);
            integral += (weights[q] * dt * val) * kernel[static_cast<size_t>(q)];
        }
        x = E * x + integral;
        out.row(i + 1) = x.transpose();
    }
    return out;
}

/// Random admissible plant: controllable, observable, spectrum bounded so
/// 10 s of open-loop data stays well scaled.
inline LtiPlant random_plant(std::mt19937_64& rng, int n)
{
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (;;) {
        LtiPlant p;
        p.n = n;
        p.A.resize(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                p.A(i, j) = gauss(rng);
        // pull the spectrum toward the unit disc scale
        p.A *= 1.0 / std::max(1.0, p.A.cwiseAbs().rowwise().sum().maxCoeff() / 1.5);
        p.B.resize(n);
        p.C.resize(n);
        for (int i = 0; i < n; ++i) {
            p.B(i) = gauss(rng);
            p.C(i) = gauss(rng);
        }
        const auto rep = regulab::model::check_structure(p);
        if (rep.controllable && rep.observable)
            return p;
    }
}

inline FilterParams random_filter(std::mt19937_64& rng, int n)
{
    std::uniform_real_distribution<double> shift(0.3, 0.9);
    FilterParams fp;
    fp.lambda.resize(n);
    fp.L.resize(n);
    double lam = -0.8;
    for (int i = 0; i < n; ++i) {
        fp.lambda(i) = lam;
        lam -= shift(rng) + 0.4;
        fp.L(i) = (i % 2 == 0 ? 1.0 : -1.0) * (0.5 + shift(rng));
    }
    return fp;
}

} // namespace fixtures
