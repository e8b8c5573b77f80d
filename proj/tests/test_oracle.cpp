#include "regulab/oracle.hpp"

#include "regulab/errors.hpp"
#include "regulab/linalg.hpp"
#include "fixtures.hpp"

#include <doctest.h>

#include <random>

using namespace regulab;

namespace {

Eigen::RowVectorXd section5_gain()
{
    const auto fp = fixtures::filter3();
    const auto pi = synth::solve_pi(fixtures::plant3(), fp);
    const Eigen::MatrixXd Ac = oracle::cascade_matrix(pi, fp, fixtures::theta_star());
    const auto cc = synth::CascadeConstants::make(fp, 2);
    const auto g = synth::stabilizing_gain(Ac, cc.calBc, fixtures::synthesis_Q(2, 3), 1.0);
    return -g.K;
}

} // namespace

TEST_CASE("oracle bundle on the section 5 configuration")
{
    const auto b = oracle::build_oracle(fixtures::plant3(), fixtures::exo2(),
                                        fixtures::filter3(), fixtures::theta_star(),
                                        section5_gain());
    CHECK(b.residuals.pi < 1e-8);
    CHECK(b.residuals.sylvester < 1e-8);
    CHECK(b.residuals.chain < 1e-8);
    CHECK(b.residuals.last_row < 1e-8);
    CHECK((b.theta_star - fixtures::theta_star()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(model::pbh_nonresonance(fixtures::plant3(), b.theta_star));

    // the cascade matrix has the expected block backbone
    CHECK(b.Ac_theta(0, 1) == 1.0);
    CHECK(b.Ac_theta(1, 0) == -4.0);
    CHECK(b.Ac_theta.block(2, 0, 6, 2).cwiseAbs().maxCoeff() == 0.0);
    CHECK(b.Ac_theta.bottomRightCorner(3, 3).isApprox(fixtures::filter3().Lambda()));
}

TEST_CASE("reduced identity at theta = theta_star")
{
    // with the true polynomial, Psi_eta_d S = -theta* . Psi_eta + C Psi_x - C_r
    const auto b = oracle::build_oracle(fixtures::plant3(), fixtures::exo2(),
                                        fixtures::filter3(), fixtures::theta_star(),
                                        section5_gain());
    CHECK(b.psi_detail.residual_last_row < 1e-8);
    // the chain makes Psi_eta a Krylov ladder of S
    const auto& exo = fixtures::exo2();
    CHECK((b.psi_detail.Psi_eta.row(0) * exo.S - b.psi_detail.Psi_eta.row(1))
              .cwiseAbs()
              .maxCoeff() < 1e-8);
}

TEST_CASE("oracle bundle computes on a simple stable plant")
{
    model::LtiPlant p;
    p.n = 2;
    p.A.resize(2, 2);
    p.A << -1, 0, 0, -2;
    p.B.resize(2);
    p.B << 1, 1;
    p.C.resize(2);
    p.C << 1, 1;
    const auto rep = model::check_structure(p);
    REQUIRE(rep.controllable);
    REQUIRE(rep.observable);

    model::FilterParams fp;
    fp.lambda.resize(2);
    fp.lambda << -0.5, -1.5;
    fp.L.resize(2);
    fp.L << 1, -1;
    model::Exosystem exo;
    exo.d = 2;
    exo.S.resize(2, 2);
    exo.S << 0, -1, 1, 0;
    exo.C_r.resize(2);
    exo.C_r << 1, 0;
    exo.w0 = Eigen::VectorXd::Ones(2);

    const Eigen::VectorXd theta = model::char_poly_theta(exo.S);
    const auto pi = synth::solve_pi(p, fp);
    const Eigen::MatrixXd Ac = oracle::cascade_matrix(pi, fp, theta);
    const auto cc = synth::CascadeConstants::make(fp, 2);
    const auto g = synth::stabilizing_gain(Ac, cc.calBc,
                                           fixtures::synthesis_Q(2, 2), 1.0);
    const auto b = oracle::build_oracle(p, exo, fp, theta, Eigen::RowVectorXd(-g.K));
    CHECK(b.residuals.pi < 1e-8);
    CHECK(b.residuals.sylvester < 1e-8);
}

TEST_CASE("x0-matched transverse coupling reproduces C rho along the flow")
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    const auto plant = fixtures::plant3();
    const auto fp = fixtures::filter3();
    const auto pi = synth::solve_pi(plant, fp);
    for (int trial = 0; trial < 3; ++trial) {
        Eigen::VectorXd rho0(3);
        rho0 << unif(rng), unif(rng), unif(rng);
        const Eigen::RowVectorXd M = oracle::m_rho_for_initial_state(plant, pi.Pi1, fp,
                                                                     rho0);
        const Eigen::MatrixXd Ao = plant.A - pi.Pi1 * fp.L * plant.C;
        for (const double t : {0.3, 1.7, 4.0}) {
            const double lhs = plant.C * fixtures::expm_oracle(Eigen::MatrixXd(Ao * t)) *
                               rho0;
            double rhs = 0.0;
            for (int k = 0; k < 3; ++k)
                rhs += M(k) * std::exp(fp.lambda(k) * t);
            CHECK(std::abs(lhs - rhs) < 1e-10);
        }
    }
}

TEST_CASE("spectrum of the transverse dynamics equals the filter diagonal")
{
    const auto plant = fixtures::plant3();
    const auto fp = fixtures::filter3();
    const auto pi = synth::solve_pi(plant, fp);
    const Eigen::MatrixXd Ao = plant.A - pi.Pi1 * fp.L * plant.C;
    auto evs = linalg::eigenvalues(Ao);
    std::sort(evs.begin(), evs.end(), [](auto a, auto b) { return a.real() < b.real(); });
    Eigen::VectorXd want = fp.lambda;
    std::sort(want.data(), want.data() + 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(std::abs(evs[static_cast<size_t>(i)].real() - want(i)) < 1e-6);
        CHECK(std::abs(evs[static_cast<size_t>(i)].imag()) < 1e-6);
    }
}

TEST_CASE("transverse decay rate matches the slowest filter mode")
{
    const auto plant = fixtures::plant3();
    const auto fp = fixtures::filter3();
    const auto pi = synth::solve_pi(plant, fp);

    Eigen::VectorXd rho0(3);
    rho0 << 0.7, -0.4, 0.2;
    const auto rep = oracle::transverse_decay(plant, fp, pi.Pi1, rho0, 8.0);
    CHECK(std::abs(rep.fitted_rate - rep.expected_rate) < 0.1 * rep.expected_rate);

    const auto zero =
        oracle::transverse_decay(plant, fp, pi.Pi1, Eigen::VectorXd::Zero(3), 8.0);
    CHECK(zero.fitted_rate == 0.0);
    CHECK(zero.final_norm == 0.0);

    Eigen::VectorXd other(3);
    other << -0.3, 0.9, 0.5;
    const auto rep2 = oracle::transverse_decay(plant, fp, pi.Pi1, other, 8.0);
    CHECK(std::abs(rep2.fitted_rate - rep.fitted_rate) < 0.05 * rep.fitted_rate);
}
