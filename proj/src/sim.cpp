#include "regulab/sim.hpp"

#include "regulab/errors.hpp"

#include <cmath>
#include <string>

namespace regulab::sim {

void Dataset::validate() const
{
    if (dt <= 0.0)
        throw ConfigError("Dataset: dt must be positive");
    if (u.size() != y.size())
        throw ConfigError("Dataset: u and y must have equal length");
    if (u.size() < 2)
        throw ConfigError("Dataset: at least two samples required");
}

void ExcitationSpec::validate() const
{
    if (!amplitudes.allFinite())
        throw ConfigError("ExcitationSpec: amplitudes must be finite");
    if (!(omega1 > 0.0))
        throw ConfigError("ExcitationSpec: omega1 must be positive");
}

double excitation(const ExcitationSpec& spec, double t)
{
    double u = 0.0;
    for (Eigen::Index k = 0; k < spec.amplitudes.size(); ++k)
        u += spec.amplitudes(k) * std::sin(static_cast<double>(k + 1) * spec.omega1 * t);
    return u;
}

Trajectory rk4_integrate(const VectorField& f, const Eigen::VectorXd& x0,
                         double t0, double t1, double h)
{
    if (!(h > 0.0))
        throw ConfigError("rk4_integrate: h must be positive");
    if (!(t1 > t0))
        throw ConfigError("rk4_integrate: t1 must exceed t0");

    const double span = t1 - t0;
    const auto full_steps = static_cast<Eigen::Index>(std::floor(span / h + 1e-9));
    const double remainder = span - static_cast<double>(full_steps) * h;
    const bool partial = remainder > 1e-12 * std::max(1.0, std::abs(t1));
    const Eigen::Index total = full_steps + (partial ? 1 : 0);

    Trajectory traj;
    traj.t.resize(static_cast<size_t>(total) + 1);
    traj.x.resize(total + 1, x0.size());

    Eigen::VectorXd x = x0;
    traj.t[0] = t0;
    traj.x.row(0) = x.transpose();

    for (Eigen::Index i = 0; i < total; ++i) {
        const double t = t0 + static_cast<double>(i) * h;
        const double step = (i < full_steps) ? h : remainder;
        const Eigen::VectorXd k1 = f(t, x);
        const Eigen::VectorXd k2 = f(t + 0.5 * step, x + (0.5 * step) * k1);
        const Eigen::VectorXd k3 = f(t + 0.5 * step, x + (0.5 * step) * k2);
        const Eigen::VectorXd k4 = f(t + step, x + step * k3);
        x += (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        const double tnext = (i + 1 == total) ? t1 : t0 + static_cast<double>(i + 1) * h;
        if (!x.allFinite())
            throw NumericError("rk4_integrate: state diverged at t = " + std::to_string(tnext));
        traj.t[static_cast<size_t>(i) + 1] = tnext;
        traj.x.row(i + 1) = x.transpose();
    }
    return traj;
}

Dataset collect_offline(const model::LtiPlant& plant, const Eigen::VectorXd& x0,
                        const std::function<double(double)>& input,
                        double t_star, double dt)
{
    plant.validate();
    if (x0.size() != plant.n)
        throw ConfigError("collect_offline: x0 must have length n");
    if (!(t_star > 0.0) || !(dt > 0.0))
        throw ConfigError("collect_offline: t_star and dt must be positive");
    const double steps = t_star / dt;
    if (std::abs(steps - std::round(steps)) > 1e-6)
        throw ConfigError("collect_offline: dt must divide t_star");

    const VectorField f = [&](double t, const Eigen::VectorXd& x) {
        return Eigen::VectorXd(plant.A * x + plant.B * input(t));
    };
    const Trajectory traj = rk4_integrate(f, x0, 0.0, t_star, dt);

    Dataset ds;
    ds.t0 = 0.0;
    ds.dt = dt;
    ds.u.resize(traj.steps());
    ds.y.resize(traj.steps());
    for (Eigen::Index i = 0; i < traj.steps(); ++i) {
        ds.u(i) = input(traj.t[static_cast<size_t>(i)]);
        ds.y(i) = plant.C * traj.x.row(i).transpose();
    }
    return ds;
}

Dataset collect_offline(const model::LtiPlant& plant, const Eigen::VectorXd& x0,
                        const ExcitationSpec& spec, double t_star, double dt)
{
    spec.validate();
    return collect_offline(plant, x0, [&spec](double t) { return excitation(spec, t); },
                           t_star, dt);
}

ExoTrajectory simulate_exosystem(const model::Exosystem& exo, double t1, double dt)
{
    exo.validate();
    const VectorField f = [&](double, const Eigen::VectorXd& w) {
        return Eigen::VectorXd(exo.S * w);
    };
    const Trajectory traj = rk4_integrate(f, exo.w0, 0.0, t1, dt);
    ExoTrajectory out;
    out.t = traj.t;
    out.w = traj.x;
    out.y_r = traj.x * exo.C_r.transpose();
    return out;
}

double uniform_draw(std::uint64_t raw, double lo, double hi)
{
    const double unit = static_cast<double>(raw >> 11) * 0x1.0p-53;
    return lo + unit * (hi - lo);
}

} // namespace regulab::sim
