#include "regulab/regulator.hpp"

#include "regulab/errors.hpp"
#include "regulab/oracle.hpp"
#include "fixtures.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace regulab;

namespace {

regulator::RegulatorConfig base_config()
{
    regulator::RegulatorConfig cfg;
    cfg.fp = fixtures::filter3();
    cfg.box = fixtures::box5();
    cfg.theta0 = fixtures::theta_star();
    cfg.mu = 0.9;
    cfg.Q = fixtures::synthesis_Q(2, 3);
    cfg.R = 1.0;
    cfg.T2 = 12.0;
    cfg.N_I = 70;
    cfg.delta = 1e-6;
    cfg.tau_s = 0.1;
    cfg.t_final = 100.0;
    cfg.flow_h = 1e-3;
    return cfg;
}

const sim::Dataset& dataset5()
{
    static sim::Dataset ds = [] {
        Eigen::VectorXd x0(3);
        x0 << 0.2, -0.5, 0.8;
        return sim::collect_offline(fixtures::plant3(), x0, fixtures::excitation4(),
                                    10.0, 1e-3);
    }();
    return ds;
}

} // namespace

TEST_CASE("the origin is an equilibrium of the flow")
{
    auto cfg = base_config();
    regulator::ClosedLoopState st;
    st.x = Eigen::VectorXd::Zero(3);
    st.w = Eigen::VectorXd::Zero(2);
    st.eta_e = Eigen::VectorXd::Zero(2);
    st.zeta_y = Eigen::VectorXd::Zero(3);
    st.zeta_u = Eigen::VectorXd::Zero(3);
    st.zeta_r = Eigen::VectorXd::Zero(3);
    st.ident = ident::IdentifierState::make(cfg.theta0, cfg.mu, cfg.box);
    st.K = Eigen::RowVectorXd::Ones(8); // any gain fixes the origin
    std::vector<regulator::TraceRow> trace;
    regulator::flow(fixtures::plant3(), fixtures::exo2(), cfg, st, 0.0, 5.0, 1e-3, trace);
    for (const auto& row : trace) {
        CHECK(row.e == 0.0);
        CHECK(row.u == 0.0);
    }
    CHECK(st.x.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("with the true parameter the error decays exponentially")
{
    auto cfg = base_config();
    cfg.N_I = 0; // flow only, no adaptation
    cfg.t_final = 40.0;
    Eigen::VectorXd x0(3);
    x0 << 0.3, -0.2, 0.6;
    const auto log = regulator::run(fixtures::plant3(), fixtures::exo2(), dataset5(),
                                    cfg, x0);
    CHECK(log.stop_reason == "max_jumps");
    CHECK(log.jumps.size() == 1); // initial synthesis only

    // fit log|e| over [5, 25] where the error is still well above rounding
    double st = 0, sl = 0, stt = 0, stl = 0;
    double count = 0;
    for (const auto& row : log.trace) {
        if (row.t < 5.0 || row.t > 25.0 || std::abs(row.e) < 1e-13)
            continue;
        const double l = std::log(std::abs(row.e));
        st += row.t;
        sl += l;
        stt += row.t * row.t;
        stl += row.t * l;
        count += 1;
    }
    const double slope = (count * stl - st * sl) / (count * stt - st * st);
    CHECK(-slope > 0.2); // fitted decay rate is strictly positive
    CHECK(std::abs(log.trace.back().e) < 1e-8);
}

TEST_CASE("jumps keep the continuous states and reset the timer")
{
    auto cfg = base_config();
    regulator::SynthesisPipeline pipeline(dataset5(), cfg);

    regulator::ClosedLoopState st;
    st.x.resize(3);
    st.x << 0.4, -0.1, 0.2;
    st.w.resize(2);
    st.w << 1.0, -0.5;
    st.eta_e.resize(2);
    st.eta_e << 0.3, 0.7;
    st.zeta_y = Eigen::VectorXd::Constant(3, 0.11);
    st.zeta_u = Eigen::VectorXd::Constant(3, -0.07);
    st.zeta_r = Eigen::VectorXd::Constant(3, 0.05);
    st.tau = 12.0;
    st.ident = ident::IdentifierState::make(cfg.theta0, cfg.mu, cfg.box);
    st.K = -pipeline.gain_for(cfg.theta0).K;

    const auto before = st;
    std::vector<ident::RegressionSample> history;
    const auto rec = regulator::jump(fixtures::plant3(), fixtures::exo2(), cfg, pipeline,
                                     st, 12.0, history);
    CHECK((st.x - before.x).cwiseAbs().maxCoeff() == 0.0);
    CHECK((st.w - before.w).cwiseAbs().maxCoeff() == 0.0);
    CHECK((st.eta_e - before.eta_e).cwiseAbs().maxCoeff() == 0.0);
    CHECK((st.zeta_y - before.zeta_y).cwiseAbs().maxCoeff() == 0.0);
    CHECK(st.tau == 0.0);
    CHECK(st.j == before.j + 1);
    CHECK(rec.j == st.j);
    CHECK(history.size() == 1);
    // the regressand is formed from the parameter active when sampled
    const double y = fixtures::plant3().C * before.x;
    const double yr = fixtures::exo2().C_r * before.w;
    CHECK(history[0].beta ==
          doctest::Approx(before.theta().dot(before.eta_e) - (y - yr)).epsilon(1e-15));
}

TEST_CASE("an identifier jump that repeats theta keeps the gain (memo hit)")
{
    auto cfg = base_config();
    // theta0 = 0 with an empty summary: the min-norm solution of
    // pinv(0) * 0 is exactly 0, so the jump reproduces theta bit for bit.
    cfg.theta0 = Eigen::VectorXd::Zero(2);
    regulator::SynthesisPipeline pipeline(dataset5(), cfg);
    regulator::ClosedLoopState st;
    st.x = Eigen::VectorXd::Zero(3);
    st.w = Eigen::VectorXd::Zero(2);
    st.eta_e = Eigen::VectorXd::Zero(2); // alpha = 0
    st.zeta_y = Eigen::VectorXd::Zero(3);
    st.zeta_u = Eigen::VectorXd::Zero(3);
    st.zeta_r = Eigen::VectorXd::Zero(3);
    st.ident = ident::IdentifierState::make(cfg.theta0, cfg.mu, cfg.box);
    st.K = -pipeline.gain_for(cfg.theta0).K;
    const Eigen::RowVectorXd K_before = st.K;

    std::vector<ident::RegressionSample> history;
    const auto rec = regulator::jump(fixtures::plant3(), fixtures::exo2(), cfg, pipeline,
                                     st, 12.0, history);
    CHECK_FALSE(rec.resynthesized);
    CHECK_FALSE(rec.synthesis_failed);
    CHECK((st.K - K_before).cwiseAbs().maxCoeff() == 0.0);
    CHECK((st.theta() - cfg.theta0).cwiseAbs().maxCoeff() == 0.0);
    CHECK(rec.closed_loop_margin > 0.0); // filled from the memoized synthesis

    // repeated queries return the same memoized synthesis object
    const auto* first = &pipeline.gain_for(cfg.theta0);
    CHECK(first == &pipeline.gain_for(cfg.theta0));
}

TEST_CASE("an infinite convergence threshold stops after the first jump")
{
    auto cfg = base_config();
    cfg.delta = std::numeric_limits<double>::infinity();
    cfg.t_final = 30.0;
    Eigen::VectorXd x0(3);
    x0 << 0.1, 0.1, 0.1;
    const auto log = regulator::run(fixtures::plant3(), fixtures::exo2(), dataset5(),
                                    cfg, x0);
    CHECK(log.stop_reason == "converged");
    CHECK(log.jumps.size() == 2); // initial synthesis + one jump
}

TEST_CASE("hybrid time domain is consistent")
{
    auto cfg = base_config();
    cfg.T2 = 6.0;
    cfg.t_final = 30.0;
    Eigen::VectorXd x0(3);
    x0 << 0.5, -0.5, 0.25;
    const auto log = regulator::run(fixtures::plant3(), fixtures::exo2(), dataset5(),
                                    cfg, x0);
    double t_prev = -1.0;
    long j_prev = 0;
    for (const auto& row : log.trace) {
        CHECK(row.t >= t_prev);
        CHECK(row.j >= j_prev);
        CHECK(row.j - j_prev <= 1);
        t_prev = row.t;
        j_prev = row.j;
    }
    // jumps every T2 until the time horizon
    CHECK(log.jumps.back().t == doctest::Approx(24.0));
}

TEST_CASE("adaptation moves theta toward the exosystem polynomial")
{
    auto cfg = base_config();
    Eigen::VectorXd theta0(2);
    theta0 << 1.0, -1.0;
    cfg.theta0 = theta0;
    cfg.t_final = 60.0;
    Eigen::VectorXd x0(3);
    x0 << 0.4, 0.2, -0.3;
    const auto log = regulator::run(fixtures::plant3(), fixtures::exo2(), dataset5(),
                                    cfg, x0);
    const Eigen::VectorXd target = fixtures::theta_star();
    const double initial_gap = (theta0 - target).cwiseAbs().maxCoeff();
    REQUIRE(log.jumps.size() >= 4);
    const double later_gap =
        (log.jumps[3].theta - target).cwiseAbs().maxCoeff();
    CHECK(later_gap < 0.05 * initial_gap);
    const double final_gap = (log.theta_final - target).cwiseAbs().maxCoeff();
    CHECK(final_gap <= later_gap + 1e-12);
}

TEST_CASE("trace and jump logs have the documented headers")
{
    auto cfg = base_config();
    cfg.t_final = 14.0;
    cfg.T2 = 7.0;
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(3);
    const auto log = regulator::run(fixtures::plant3(), fixtures::exo2(), dataset5(),
                                    cfg, x0);
    const auto dir = std::filesystem::temp_directory_path();
    const auto tpath = (dir / "regulab_trace_test.csv").string();
    const auto jpath = (dir / "regulab_jumps_test.csv").string();
    regulator::write_trace_csv(tpath, log);
    regulator::write_jumps_csv(jpath, log);

    std::ifstream tin(tpath);
    std::string theader;
    std::getline(tin, theader);
    CHECK(theader == "t,j,e,u,y,y_r,theta_1,theta_2");
    std::ifstream jin(jpath);
    std::string jheader;
    std::getline(jin, jheader);
    CHECK(jheader ==
          "j,t,theta_1,theta_2,gain_1,gain_2,gain_3,gain_4,gain_5,gain_6,gain_7,gain_8,"
          "pe_metric,stop_reason");
    std::string last, line;
    while (std::getline(jin, line))
        if (!line.empty())
            last = line;
    CHECK(last.find(log.stop_reason) != std::string::npos);
    std::filesystem::remove(tpath);
    std::filesystem::remove(jpath);
}

TEST_CASE("invalid initial parameter is rejected before simulation")
{
    auto cfg = base_config();
    cfg.theta0 = Eigen::VectorXd::Constant(2, 99.0); // outside the box
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(3);
    CHECK_THROWS_AS(regulator::run(fixtures::plant3(), fixtures::exo2(), dataset5(),
                                   cfg, x0),
                    ConfigError);
}
