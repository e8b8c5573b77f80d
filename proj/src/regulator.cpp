#include "regulab/regulator.hpp"

#include "regulab/errors.hpp"
#include "regulab/linalg.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace regulab::regulator {

void RegulatorConfig::validate(int d) const
{
    fp.validate();
    box.validate();
    if (theta0.size() != d || box.lo.size() != d)
        throw ConfigError("RegulatorConfig: theta0 and box must have the exosystem order d");
    if (!(mu > 0.0 && mu < 1.0))
        throw ConfigError("RegulatorConfig: mu must lie in (0,1)");
    if (!(T2 > 0.0))
        throw ConfigError("RegulatorConfig: T2 must be positive");
    if (!(delta > 0.0))
        throw ConfigError("RegulatorConfig: delta must be positive");
    if (!(tau_s > 0.0) || !(flow_h > 0.0) || !(t_final > 0.0))
        throw ConfigError("RegulatorConfig: tau_s, flow_h, t_final must be positive");
    const Eigen::Index m = static_cast<Eigen::Index>(d) + 2 * fp.n();
    if (Q.rows() != m || Q.cols() != m)
        throw ConfigError("RegulatorConfig: Q must be (d+2n) x (d+2n)");
    if (!(R > 0.0))
        throw ConfigError("RegulatorConfig: R must be positive");
    if (N_I < 0)
        throw ConfigError("RegulatorConfig: N_I must be nonnegative");
}

SynthesisPipeline::SynthesisPipeline(const sim::Dataset& ds, const RegulatorConfig& cfg)
    : ds_(ds), cfg_(cfg)
{
    ds.validate();
    filters_ = postproc::replay_filters(ds, cfg.fp);
    const double span_end = cfg.T1 > 0.0 ? cfg.T1 : -1.0;
    sample_idx_ = postproc::decimation_indices(ds, cfg.tau_s, 0.0, span_end);
    grid_.resize(static_cast<size_t>(ds.size()));
    for (Eigen::Index i = 0; i < ds.size(); ++i)
        grid_[static_cast<size_t>(i)] = ds.time(i);
}

namespace {

std::vector<double> key_of(const Eigen::VectorXd& theta)
{
    return {theta.data(), theta.data() + theta.size()};
}

} // namespace

const postproc::DataMatrices& SynthesisPipeline::matrices_for(const Eigen::VectorXd& theta)
{
    const auto key = key_of(theta);
    auto it = dm_memo_.find(key);
    if (it != dm_memo_.end())
        return it->second;
    postproc::PostProcessed pp;
    pp.grid = grid_;
    pp.zeta_y = filters_.zeta_y;
    pp.zeta_u = filters_.zeta_u;
    pp.chi = filters_.chi;
    pp.eta_y = postproc::replay_internal_model(ds_, theta);
    pp.theta_used = theta;
    auto dm = postproc::assemble_matrices(pp, ds_, cfg_.fp, sample_idx_);
    return dm_memo_.emplace(key, std::move(dm)).first->second;
}

const synth::SynthesisResult& SynthesisPipeline::gain_for(const Eigen::VectorXd& theta)
{
    const auto key = key_of(theta);
    auto it = memo_.find(key);
    if (it != memo_.end())
        return it->second;
    const postproc::DataMatrices& dm = matrices_for(theta);
    synth::SynthesisResult res =
        synth::synthesize(dm, theta, cfg_.fp, cfg_.Q, cfg_.R, cfg_.pinv_rel_tol);
    return memo_.emplace(key, std::move(res)).first->second;
}

void flow(const model::LtiPlant& plant, const model::Exosystem& exo,
          const RegulatorConfig& cfg, ClosedLoopState& state, double t_start,
          double duration, double h, std::vector<TraceRow>& trace)
{
    const int n = plant.n;
    const int d = exo.d;
    const Eigen::MatrixXd Phi = model::companion(state.theta());
    Eigen::VectorXd G = Eigen::VectorXd::Zero(d);
    G(d - 1) = 1.0;
    const Eigen::MatrixXd Lambda = cfg.fp.Lambda();
    const Eigen::VectorXd& L = cfg.fp.L;

    // packed state: [x; w; eta_e; zeta_y; zeta_u; zeta_r]
    const Eigen::Index dim = 4 * n + 2 * d;
    Eigen::VectorXd s(dim);
    s << state.x, state.w, state.eta_e, state.zeta_y, state.zeta_u, state.zeta_r;

    const Eigen::RowVectorXd K = state.K;
    const auto rhs = [&](double, const Eigen::VectorXd& z) {
        const auto x = z.segment(0, n);
        const auto w = z.segment(n, d);
        const auto eta = z.segment(n + d, d);
        const auto zy = z.segment(n + 2 * d, n);
        const auto zu = z.segment(n + 2 * d + n, n);
        const auto zr = z.segment(n + 2 * d + 2 * n, n);
        const double y = plant.C * x;
        const double yr = exo.C_r * w;
        const double e = y - yr;
        double u = K.head(d).dot(eta);
        u += K.segment(d, n).dot(zy - zr);
        u += K.tail(n).dot(zu);
        Eigen::VectorXd dz(dim);
        dz.segment(0, n) = plant.A * x + plant.B * u;
        dz.segment(n, d) = exo.S * w;
        dz.segment(n + d, d) = Phi * eta + G * e;
        dz.segment(n + 2 * d, n) = Lambda * zy + L * y;
        dz.segment(n + 2 * d + n, n) = Lambda * zu + L * u;
        dz.segment(n + 2 * d + 2 * n, n) = Lambda * zr + L * yr;
        return dz;
    };

    const auto steps = static_cast<long>(std::llround(duration / h));
    if (std::abs(static_cast<double>(steps) * h - duration) > 1e-9)
        throw ConfigError("flow: duration must be a multiple of the flow step");
    const auto stride = static_cast<long>(std::llround(cfg.tau_s / h));
    if (stride < 1 || std::abs(static_cast<double>(stride) * h - cfg.tau_s) > 1e-12)
        throw ConfigError("flow: tau_s must be a multiple of the flow step");

    const auto log_row = [&](double t) {
        const double y = plant.C * s.segment(0, n);
        const double yr = exo.C_r * s.segment(n, d);
        double u = K.head(d).dot(s.segment(n + d, d));
        u += K.segment(d, n).dot(s.segment(n + 2 * d, n) - s.segment(n + 2 * d + 2 * n, n));
        u += K.tail(n).dot(s.segment(n + 2 * d + n, n));
        trace.push_back({t, state.j, y - yr, u, y, yr, state.theta()});
    };

    for (long i = 0; i < steps; ++i) {
        const double t = t_start + static_cast<double>(i) * h;
        const Eigen::VectorXd k1 = rhs(t, s);
        const Eigen::VectorXd k2 = rhs(t + 0.5 * h, s + (0.5 * h) * k1);
        const Eigen::VectorXd k3 = rhs(t + 0.5 * h, s + (0.5 * h) * k2);
        const Eigen::VectorXd k4 = rhs(t + h, s + h * k3);
        s += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!s.allFinite())
            throw NumericError("flow: closed-loop state diverged at t = " +
                               std::to_string(t + h));
        if ((i + 1) % stride == 0)
            log_row(t_start + static_cast<double>(i + 1) * h);
    }

    state.x = s.segment(0, n);
    state.w = s.segment(n, d);
    state.eta_e = s.segment(n + d, d);
    state.zeta_y = s.segment(n + 2 * d, n);
    state.zeta_u = s.segment(n + 2 * d + n, n);
    state.zeta_r = s.segment(n + 2 * d + 2 * n, n);
    state.tau += duration;
}

JumpRecord jump(const model::LtiPlant& plant, const model::Exosystem& exo,
                const RegulatorConfig& cfg, SynthesisPipeline& pipeline,
                ClosedLoopState& state, double t_now,
                std::vector<ident::RegressionSample>& history)
{
    const double y = plant.C * state.x;
    const double yr = exo.C_r * state.w;
    const double e = y - yr;
    ident::RegressionSample sample;
    sample.alpha = state.eta_e;
    sample.beta = state.theta().dot(state.eta_e) - e;
    history.push_back(sample);

    const Eigen::VectorXd theta_prev = state.theta();
    ident::IdentifierState next = ident::jump(state.ident, sample);

    JumpRecord rec;
    rec.resynthesized = false;
    rec.synthesis_failed = false;
    const bool changed = (next.theta - theta_prev).cwiseAbs().maxCoeff() > 0.0;
    try {
        // Memo hit when theta is unchanged or repeats an earlier value.
        const synth::SynthesisResult& sr = pipeline.gain_for(next.theta);
        state.K = -sr.K; // applied row: the realized loop is A_hat - Bc K
        rec.care_residual = sr.care_residual;
        rec.closed_loop_margin = sr.closed_loop_margin;
        rec.P_norm = sr.P.cwiseAbs().maxCoeff();
        rec.resynthesized = changed;
    } catch (const std::runtime_error&) {
        // Retain the previous stabilizing pair; the identifier summary
        // (R, v) keeps the sample.
        next.theta = theta_prev;
        rec.synthesis_failed = true;
        const synth::SynthesisResult& sr = pipeline.gain_for(theta_prev);
        rec.care_residual = sr.care_residual;
        rec.closed_loop_margin = sr.closed_loop_margin;
        rec.P_norm = sr.P.cwiseAbs().maxCoeff();
    }
    state.ident = next;
    state.tau = 0.0;
    state.j += 1;

    rec.j = state.j;
    rec.t = t_now;
    rec.theta = state.theta();
    rec.gain = state.K;
    const auto pe = ident::pe_metric(history, cfg.mu, static_cast<int>(history.size()));
    rec.pe_metric = pe.value_or(0.0);
    rec.cost = ident::cost_J(history, cfg.mu, state.theta());
    return rec;
}

RunLog run(const model::LtiPlant& plant, const model::Exosystem& exo,
           const sim::Dataset& ds, const RegulatorConfig& cfg, const Eigen::VectorXd& x0)
{
    plant.validate();
    exo.validate();
    cfg.validate(exo.d);
    if (x0.size() != plant.n)
        throw ConfigError("regulator run: x0 must have length n");
    if (!cfg.box.contains(cfg.theta0))
        throw ConfigError("regulator run: theta0 must lie in the box");
    if (!exo.spectrum_admissible())
        throw AssumptionError("regulator run: exosystem eigenvalues must be distinct and "
                              "purely imaginary");

    SynthesisPipeline pipeline(ds, cfg);
    // Initial gain; excitation failures (Assumption 7) surface here, before
    // any simulation.
    const synth::SynthesisResult& sr0 = pipeline.gain_for(cfg.theta0);

    ClosedLoopState state;
    state.x = x0;
    state.w = exo.w0;
    state.eta_e = Eigen::VectorXd::Zero(exo.d);
    state.zeta_y = Eigen::VectorXd::Zero(plant.n);
    state.zeta_u = Eigen::VectorXd::Zero(plant.n);
    state.zeta_r = Eigen::VectorXd::Zero(plant.n);
    state.ident = ident::IdentifierState::make(cfg.theta0, cfg.mu, cfg.box);
    state.K = -sr0.K;

    RunLog log;
    {
        const double y0v = plant.C * x0;
        const double yr0 = exo.C_r * exo.w0;
        TraceRow first;
        first.t = 0.0;
        first.j = 0;
        first.e = y0v - yr0;
        first.u = 0.0;
        first.y = y0v;
        first.y_r = yr0;
        first.theta = cfg.theta0;
        log.trace.push_back(first);
    }
    {
        JumpRecord init;
        init.j = 0;
        init.t = 0.0;
        init.theta = cfg.theta0;
        init.gain = state.K;
        init.care_residual = sr0.care_residual;
        init.closed_loop_margin = sr0.closed_loop_margin;
        init.P_norm = sr0.P.cwiseAbs().maxCoeff();
        init.resynthesized = true;
        log.jumps.push_back(init);
    }

    std::vector<ident::RegressionSample> history;
    double t = 0.0;
    bool jumping = cfg.N_I > 0;
    std::string stop;

    try {
        while (t < cfg.t_final - 1e-9) {
            const double horizon = jumping ? std::min(t + cfg.T2, cfg.t_final) : cfg.t_final;
            flow(plant, exo, cfg, state, t, horizon - t, cfg.flow_h, log.trace);
            t = horizon;
            if (!jumping || t >= cfg.t_final - 1e-9)
                continue;

            const Eigen::VectorXd theta_prev = state.theta();
            JumpRecord rec = jump(plant, exo, cfg, pipeline, state, t, history);
            log.jumps.push_back(rec);
            const double dtheta = (state.theta() - theta_prev).cwiseAbs().maxCoeff();
            if (!rec.synthesis_failed && dtheta < cfg.delta) {
                stop = "converged";
                jumping = false;
            } else if (state.j >= cfg.N_I) {
                stop = "max_jumps";
                jumping = false;
            }
        }
        if (stop.empty())
            stop = jumping ? "t_final" : "max_jumps";
    } catch (const NumericError& err) {
        stop = std::string("diverged: ") + err.what();
    }

    log.stop_reason = stop;
    log.theta_final = state.theta();
    log.K_final = state.K;
    return log;
}

namespace {

void put(std::ofstream& out, double v, bool lead_comma = true)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    if (lead_comma)
        out << ',';
    out << buf;
}

} // namespace

void write_trace_csv(const std::string& path, const RunLog& log)
{
    std::ofstream out(path);
    if (!out)
        throw ConfigError("write_trace_csv: cannot open " + path);
    const Eigen::Index d = log.theta_final.size();
    out << "t,j,e,u,y,y_r";
    for (Eigen::Index i = 1; i <= d; ++i)
        out << ",theta_" << i;
    out << "\n";
    for (const auto& row : log.trace) {
        put(out, row.t, false);
        out << ',' << row.j;
        put(out, row.e);
        put(out, row.u);
        put(out, row.y);
        put(out, row.y_r);
        for (Eigen::Index i = 0; i < d; ++i)
            put(out, row.theta(i));
        out << "\n";
    }
}

void write_jumps_csv(const std::string& path, const RunLog& log)
{
    std::ofstream out(path);
    if (!out)
        throw ConfigError("write_jumps_csv: cannot open " + path);
    const Eigen::Index d = log.theta_final.size();
    const Eigen::Index m = log.K_final.size();
    out << "j,t";
    for (Eigen::Index i = 1; i <= d; ++i)
        out << ",theta_" << i;
    for (Eigen::Index i = 1; i <= m; ++i)
        out << ",gain_" << i;
    out << ",pe_metric,stop_reason\n";
    for (size_t r = 0; r < log.jumps.size(); ++r) {
        const auto& rec = log.jumps[r];
        out << rec.j;
        put(out, rec.t);
        for (Eigen::Index i = 0; i < d; ++i)
            put(out, rec.theta(i));
        for (Eigen::Index i = 0; i < m; ++i)
            put(out, rec.gain(i));
        put(out, rec.pe_metric);
        out << ',' << (r + 1 == log.jumps.size() ? log.stop_reason : "");
        out << "\n";
    }
}

} // namespace regulab::regulator
