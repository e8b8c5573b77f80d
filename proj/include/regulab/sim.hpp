#pragma once

#include "regulab/model.hpp"

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace regulab::sim {

/// Uniformly sampled input/output record of an offline experiment.
struct Dataset {
    double t0 = 0.0;
    double dt = 0.0;
    Eigen::VectorXd u;
    Eigen::VectorXd y;

    Eigen::Index size() const { return u.size(); }
    double time(Eigen::Index i) const { return t0 + dt * static_cast<double>(i); }
    void validate() const;
};

struct ExcitationSpec {
    Eigen::VectorXd amplitudes;
    double omega1 = 0.0; // rad/s

    void validate() const;
};

/// sum_k a_k sin(k * omega1 * t).
double excitation(const ExcitationSpec& spec, double t);

using VectorField = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;

struct Trajectory {
    std::vector<double> t;
    Eigen::MatrixXd x; // one row per grid point

    Eigen::Index steps() const { return static_cast<Eigen::Index>(t.size()); }
};

/// Classical fixed-step RK4. The grid contains t0 and t1; the last step is
/// shortened to land exactly on t1. Throws NumericError with the offending
/// time if the state leaves the finite range.
Trajectory rk4_integrate(const VectorField& f, const Eigen::VectorXd& x0,
                         double t0, double t1, double h);

/// Integrate the plant under the given input and record (u, y) on the dt grid.
/// dt is both the integration step and the recording period; the input is
/// evaluated exactly at the RK4 stage times.
Dataset collect_offline(const model::LtiPlant& plant, const Eigen::VectorXd& x0,
                        const std::function<double(double)>& input,
                        double t_star, double dt);

Dataset collect_offline(const model::LtiPlant& plant, const Eigen::VectorXd& x0,
                        const ExcitationSpec& spec, double t_star, double dt);

struct ExoTrajectory {
    std::vector<double> t;
    Eigen::MatrixXd w;   // one row per grid point
    Eigen::VectorXd y_r;
};

ExoTrajectory simulate_exosystem(const model::Exosystem& exo, double t1, double dt);

/// Deterministic uniform draw on [lo, hi) from the top 53 bits of the engine;
/// independent of the standard library's distribution internals.
double uniform_draw(std::uint64_t raw, double lo, double hi);

} // namespace regulab::sim
