#pragma once

#include "regulab/identifier.hpp"
#include "regulab/model.hpp"
#include "regulab/postproc.hpp"
#include "regulab/sim.hpp"
#include "regulab/synth.hpp"

#include <Eigen/Dense>

#include <map>
#include <string>
#include <vector>

namespace regulab::regulator {

struct RegulatorConfig {
    model::FilterParams fp;
    model::ThetaBox box;
    Eigen::VectorXd theta0;
    double mu = 0.9;
    Eigen::MatrixXd Q; // (d+2n) x (d+2n) synthesis weight
    double R = 1.0;
    double T1 = -1.0;  // offline data-matrix span end; < 0 means full dataset
    double T2 = 12.0;  // dwell between jumps
    int N_I = 70;      // max jumps
    double delta = 1e-6; // stop when |theta_{i+1} - theta_i|_inf < delta
    double tau_s = 0.1;  // trace sampling period
    double t_final = 100.0;
    double flow_h = 1e-3;
    double pinv_rel_tol = 1e-10;

    void validate(int d) const;
};

/// Full closed-loop state. During flows every derivative follows the plant,
/// exosystem, filter, and internal-model equations; e = y - y_r is always
/// recomputed from states. K is the applied feedback row:
/// u = K col(eta_e, zeta_y - zeta_r, zeta_u).
struct ClosedLoopState {
    Eigen::VectorXd x;
    Eigen::VectorXd w;
    Eigen::VectorXd eta_e;
    Eigen::VectorXd zeta_y;
    Eigen::VectorXd zeta_u;
    Eigen::VectorXd zeta_r;
    double tau = 0.0;
    long j = 0;
    ident::IdentifierState ident;
    Eigen::RowVectorXd K;

    const Eigen::VectorXd& theta() const { return ident.theta; }
};

struct TraceRow {
    double t = 0.0;
    long j = 0;
    double e = 0.0;
    double u = 0.0;
    double y = 0.0;
    double y_r = 0.0;
    Eigen::VectorXd theta;
};

struct JumpRecord {
    long j = 0;
    double t = 0.0;
    Eigen::VectorXd theta;    // parameter in effect after the jump
    Eigen::RowVectorXd gain;  // applied feedback row after the jump
    double pe_metric = 0.0;
    double cost = 0.0;
    double care_residual = 0.0;
    double closed_loop_margin = 0.0;
    double P_norm = 0.0; // |P|_inf of the active synthesis
    bool resynthesized = false;
    bool synthesis_failed = false;
};

struct RunLog {
    std::vector<TraceRow> trace;
    std::vector<JumpRecord> jumps;
    std::string stop_reason; // converged | max_jumps | diverged: ...
    Eigen::VectorXd theta_final;
    Eigen::RowVectorXd K_final;
};

/// Controller-side workspace shared across jumps: the recorded dataset, the
/// theta-independent filter replay, and a synthesis memo keyed by theta.
class SynthesisPipeline {
public:
    SynthesisPipeline(const sim::Dataset& ds, const RegulatorConfig& cfg);

    /// Post-process the dataset for this theta and synthesize a gain.
    /// Memoized on exact theta value.
    const synth::SynthesisResult& gain_for(const Eigen::VectorXd& theta);

    const postproc::DataMatrices& matrices_for(const Eigen::VectorXd& theta);

private:
    const sim::Dataset& ds_;
    const RegulatorConfig& cfg_;
    postproc::FilterReplay filters_;
    std::vector<Eigen::Index> sample_idx_;
    std::vector<double> grid_;
    std::map<std::vector<double>, synth::SynthesisResult> memo_;
    std::map<std::vector<double>, postproc::DataMatrices> dm_memo_;
};

/// Flow the interconnection for `duration` with fixed RK4 step h, appending
/// trace rows on the tau_s grid (rows strictly after the segment start).
/// (R, v, theta, K) are constant during flows.
void flow(const model::LtiPlant& plant, const model::Exosystem& exo,
          const RegulatorConfig& cfg, ClosedLoopState& state, double t_start,
          double duration, double h, std::vector<TraceRow>& trace);

/// One hybrid jump: sample (alpha, beta) = (eta_e, theta^T eta_e - e), update
/// the identifier, and refresh the gain through the pipeline when theta
/// changed. Synthesis failure retains the previous (theta, K). States other
/// than (tau, R, v, theta, K, j) are continuous across the jump.
JumpRecord jump(const model::LtiPlant& plant, const model::Exosystem& exo,
                const RegulatorConfig& cfg, SynthesisPipeline& pipeline,
                ClosedLoopState& state, double t_now,
                std::vector<ident::RegressionSample>& history);

/// Full adaptive run: synthesize K(theta0), then alternate flow(T2) and jumps
/// until |theta_{i+1} - theta_i| < delta or N_I jumps, and keep flowing with
/// the final gain until t_final. Divergence aborts with a partial log.
RunLog run(const model::LtiPlant& plant, const model::Exosystem& exo,
           const sim::Dataset& ds, const RegulatorConfig& cfg, const Eigen::VectorXd& x0);

void write_trace_csv(const std::string& path, const RunLog& log);
void write_jumps_csv(const std::string& path, const RunLog& log);

} // namespace regulab::regulator
