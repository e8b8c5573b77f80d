#pragma once

#include "regulab/model.hpp"
#include "regulab/regulator.hpp"
#include "regulab/sim.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>

namespace regulab::cfg {

/// Aggregated experiment description, parsed from JSON. Matrices are
/// row-major arrays of arrays; vectors are flat arrays.
struct ExperimentConfig {
    model::LtiPlant plant;
    model::Exosystem exosystem;
    model::FilterParams filter;
    sim::ExcitationSpec excitation;

    struct Sampling {
        double t_star = 10.0;
        double tau_s = 0.1;
        double internal_h = 1e-3;
    } sampling;

    struct Identifier {
        double mu = 0.9;
        Eigen::VectorXd theta0;
        Eigen::VectorXd box_lo;
        Eigen::VectorXd box_hi;
    } identifier;

    struct Synthesis {
        double Q_scale = 1.0;
        double R_scale = 1.0;
        double eta_weight = 10.0; // extra weight on the internal-model block of Q
    } synthesis;

    struct Regulator {
        double T2 = 12.0;
        int N_I = 70;
        double delta = 1e-6;
        double t_final = 100.0;
    } regulator;

    std::uint64_t seed = 0;

    void validate() const;

    /// Q = Q_scale * diag(eta_weight * I_d, I_2n).
    Eigen::MatrixXd synthesis_Q() const;
    model::ThetaBox theta_box() const;
    regulator::RegulatorConfig regulator_config() const;

    /// Seeded uniform draw of the plant initial state in [-1, 1]^n.
    /// stream 0 is the offline collection, stream 1 the online run.
    Eigen::VectorXd draw_x0(std::uint64_t stream) const;
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& cfg);

} // namespace regulab::cfg
