#include "regulab/postproc.hpp"

#include "regulab/errors.hpp"
#include "regulab/linalg.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

namespace regulab::postproc {

Eigen::VectorXd stencil_derivatives(const Eigen::VectorXd& s, double dt)
{
    const Eigen::Index N = s.size();
    Eigen::VectorXd ds(N);
    if (N < 2)
        throw ConfigError("stencil_derivatives: need at least two samples");
    if (N < 5) {
        ds(0) = (s(1) - s(0)) / dt;
        ds(N - 1) = (s(N - 1) - s(N - 2)) / dt;
        for (Eigen::Index i = 1; i + 1 < N; ++i)
            ds(i) = (s(i + 1) - s(i - 1)) / (2.0 * dt);
        return ds;
    }
    for (Eigen::Index i = 2; i + 2 < N; ++i)
        ds(i) = (s(i - 2) - 8.0 * s(i - 1) + 8.0 * s(i + 1) - s(i + 2)) / (12.0 * dt);
    // one-sided 5-point stencils, also 4th order
    const auto fwd = [&](Eigen::Index i) {
        return (-25.0 * s(i) + 48.0 * s(i + 1) - 36.0 * s(i + 2) + 16.0 * s(i + 3) -
                3.0 * s(i + 4)) /
               (12.0 * dt);
    };
    const auto bwd = [&](Eigen::Index i) {
        return (25.0 * s(i) - 48.0 * s(i - 1) + 36.0 * s(i - 2) - 16.0 * s(i - 3) +
                3.0 * s(i - 4)) /
               (12.0 * dt);
    };
    ds(0) = fwd(0);
    ds(1) = fwd(1);
    ds(N - 2) = bwd(N - 2);
    ds(N - 1) = bwd(N - 1);
    return ds;
}

Eigen::MatrixXd propagate_hermite(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                  const Eigen::VectorXd& sig, const Eigen::VectorXd& dsig,
                                  double dt, const Eigen::VectorXd& x0)
{
    const Eigen::Index m = A.rows();
    const Eigen::Index N = sig.size();
    if (A.cols() != m || b.size() != m || dsig.size() != N || x0.size() != m)
        throw ConfigError("propagate_hermite: dimension mismatch");

    const Eigen::MatrixXd E = linalg::expm(A * dt);
    // I_k b = integral_0^dt exp(A (dt - s)) s^k ds * b = dt^{k+1} k! phi_{k+1}(A dt) b
    const Eigen::MatrixXd V = linalg::phi_times(A * dt, b, 4);
    const Eigen::VectorXd m0 = dt * V.col(0);
    const Eigen::VectorXd m1 = dt * dt * V.col(1);
    const Eigen::VectorXd m2 = 2.0 * std::pow(dt, 3) * V.col(2);
    const Eigen::VectorXd m3 = 6.0 * std::pow(dt, 4) * V.col(3);

    Eigen::MatrixXd out(N, m);
    Eigen::VectorXd x = x0;
    out.row(0) = x.transpose();
    for (Eigen::Index i = 0; i + 1 < N; ++i) {
        const double y0 = sig(i), y1 = sig(i + 1);
        const double d0 = dsig(i), d1 = dsig(i + 1);
        const double a0 = y0;
        const double a1 = d0;
        const double a2 = (3.0 * (y1 - y0) / dt - 2.0 * d0 - d1) / dt;
        const double a3 = (2.0 * (y0 - y1) / dt + d0 + d1) / (dt * dt);
        x = E * x + a0 * m0 + a1 * m1 + a2 * m2 + a3 * m3;
        if (!x.allFinite())
            throw NumericError("propagate_hermite: state diverged at sample " +
                               std::to_string(i + 1));
        out.row(i + 1) = x.transpose();
    }
    return out;
}

FilterReplay replay_filters(const sim::Dataset& ds, const model::FilterParams& fp)
{
    ds.validate();
    const int n = fp.n();
    const Eigen::Index N = ds.size();
    const Eigen::VectorXd dy = stencil_derivatives(ds.y, ds.dt);
    const Eigen::VectorXd du = stencil_derivatives(ds.u, ds.dt);
    const Eigen::MatrixXd Lambda = fp.Lambda();
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);

    FilterReplay fr;
    fr.zeta_y = propagate_hermite(Lambda, fp.L, ds.y, dy, ds.dt, zero);
    fr.zeta_u = propagate_hermite(Lambda, fp.L, ds.u, du, ds.dt, zero);
    fr.chi.resize(N, n);
    for (Eigen::Index i = 0; i < N; ++i) {
        const double t = ds.dt * static_cast<double>(i);
        for (int j = 0; j < n; ++j)
            fr.chi(i, j) = std::exp(fp.lambda(j) * t);
    }
    return fr;
}

Eigen::MatrixXd replay_internal_model(const sim::Dataset& ds, const Eigen::VectorXd& theta)
{
    ds.validate();
    const Eigen::Index d = theta.size();
    const Eigen::MatrixXd Phi = model::companion(theta);
    Eigen::VectorXd G = Eigen::VectorXd::Zero(d);
    G(d - 1) = 1.0;
    const Eigen::VectorXd dy = stencil_derivatives(ds.y, ds.dt);
    return propagate_hermite(Phi, G, ds.y, dy, ds.dt, Eigen::VectorXd::Zero(d));
}

PostProcessed replay(const sim::Dataset& ds, const model::FilterParams& fp,
                     const Eigen::VectorXd& theta)
{
    const FilterReplay fr = replay_filters(ds, fp);
    PostProcessed pp;
    pp.grid.resize(static_cast<size_t>(ds.size()));
    for (Eigen::Index i = 0; i < ds.size(); ++i)
        pp.grid[static_cast<size_t>(i)] = ds.time(i);
    pp.zeta_y = fr.zeta_y;
    pp.zeta_u = fr.zeta_u;
    pp.chi = fr.chi;
    pp.eta_y = replay_internal_model(ds, theta);
    pp.theta_used = theta;
    return pp;
}

DataMatrices assemble_matrices(const PostProcessed& pp, const sim::Dataset& ds,
                               const model::FilterParams& fp,
                               const std::vector<Eigen::Index>& sample_idx)
{
    const int n = fp.n();
    const int d = static_cast<int>(pp.theta_used.size());
    const auto K = static_cast<Eigen::Index>(sample_idx.size());
    if (K < 3 * n)
        throw AssumptionError("assemble_matrices: " + std::to_string(K) +
                              " samples selected, need at least 3n = " +
                              std::to_string(3 * n) + " (Assumption 7 cannot hold)");
    for (const Eigen::Index idx : sample_idx)
        if (idx < 0 || idx >= ds.size())
            throw ConfigError("assemble_matrices: sample index out of range");

    const Eigen::MatrixXd Phi = model::companion(pp.theta_used);
    Eigen::VectorXd G = Eigen::VectorXd::Zero(d);
    G(d - 1) = 1.0;
    const Eigen::MatrixXd Lambda = fp.Lambda();

    DataMatrices dm;
    dm.n = n;
    dm.d = d;
    dm.Y.resize(K);
    dm.U.resize(K);
    dm.Z_eta.resize(d, K);
    dm.Z_eta_plus.resize(d, K);
    dm.Z_zeta.resize(2 * n, K);
    dm.Z_zeta_plus.resize(2 * n, K);
    dm.X.resize(n, K);
    dm.sample_times.resize(static_cast<size_t>(K));

    for (Eigen::Index c = 0; c < K; ++c) {
        const Eigen::Index i = sample_idx[static_cast<size_t>(c)];
        const double y = ds.y(i);
        const double u = ds.u(i);
        dm.Y(c) = y;
        dm.U(c) = u;
        dm.sample_times[static_cast<size_t>(c)] = ds.time(i);

        const Eigen::VectorXd eta = pp.eta_y.row(i).transpose();
        const Eigen::VectorXd zy = pp.zeta_y.row(i).transpose();
        const Eigen::VectorXd zu = pp.zeta_u.row(i).transpose();
        dm.Z_eta.col(c) = eta;
        dm.Z_eta_plus.col(c) = Phi * eta + G * y;
        dm.Z_zeta.col(c).head(n) = zy;
        dm.Z_zeta.col(c).tail(n) = zu;
        dm.Z_zeta_plus.col(c).head(n) = Lambda * zy + fp.L * y;
        dm.Z_zeta_plus.col(c).tail(n) = Lambda * zu + fp.L * u;
        dm.X.col(c) = pp.chi.row(i).transpose();
    }
    return dm;
}

std::vector<Eigen::Index> decimation_indices(const sim::Dataset& ds, double tau_s,
                                             double t_begin, double t_end)
{
    ds.validate();
    if (!(tau_s > 0.0))
        throw ConfigError("decimation_indices: tau_s must be positive");
    const double ratio = tau_s / ds.dt;
    const auto stride = static_cast<Eigen::Index>(std::llround(ratio));
    if (stride < 1 || std::abs(ratio - static_cast<double>(stride)) > 1e-6)
        throw ConfigError("decimation_indices: tau_s must be an integer multiple of dt");
    const double last = t_end < 0.0 ? ds.time(ds.size() - 1) : t_end;
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < ds.size(); i += stride) {
        const double t = ds.time(i);
        if (t + 1e-12 < t_begin)
            continue;
        if (t > last + 1e-9)
            break;
        idx.push_back(i);
    }
    return idx;
}

ExcitationReport excitation_rank(const DataMatrices& dm, double rel_tol)
{
    Eigen::MatrixXd stacked(dm.Z_zeta.rows() + dm.X.rows(), dm.columns());
    stacked << dm.Z_zeta, dm.X;
    for (Eigen::Index r = 0; r < stacked.rows(); ++r) {
        const double nrm = stacked.row(r).norm();
        if (nrm > 0.0)
            stacked.row(r) /= nrm;
    }
    ExcitationReport rep;
    rep.rank = static_cast<int>(linalg::numerical_rank(stacked, rel_tol).rank);
    rep.satisfied = rep.rank == 3 * dm.n;
    return rep;
}

void write_postprocessed_csv(const std::string& path, const PostProcessed& pp)
{
    std::ofstream out(path);
    if (!out)
        throw ConfigError("write_postprocessed_csv: cannot open " + path);
    const int n = static_cast<int>(pp.zeta_y.cols());
    const int d = static_cast<int>(pp.eta_y.cols());
    out << "t";
    for (int j = 1; j <= n; ++j)
        out << ",zeta_y_" << j;
    for (int j = 1; j <= n; ++j)
        out << ",zeta_u_" << j;
    for (int j = 1; j <= n; ++j)
        out << ",chi_" << j;
    for (int j = 1; j <= d; ++j)
        out << ",eta_y_" << j;
    out << "\n";
    char buf[32];
    const auto put = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << ',' << buf;
    };
    for (size_t i = 0; i < pp.grid.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", pp.grid[i]);
        out << buf;
        const auto r = static_cast<Eigen::Index>(i);
        for (int j = 0; j < n; ++j)
            put(pp.zeta_y(r, j));
        for (int j = 0; j < n; ++j)
            put(pp.zeta_u(r, j));
        for (int j = 0; j < n; ++j)
            put(pp.chi(r, j));
        for (int j = 0; j < d; ++j)
            put(pp.eta_y(r, j));
        out << "\n";
    }
}

} // namespace regulab::postproc
