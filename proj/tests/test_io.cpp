#include "regulab/config.hpp"
#include "regulab/csv.hpp"
#include "regulab/errors.hpp"
#include "fixtures.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace regulab;

namespace {

std::string section5_json()
{
    std::ifstream in(std::string(REGULAB_SOURCE_DIR) + "/configs/section5.json");
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("config parses, serializes, and round-trips")
{
    const auto cfg = cfg::parse_config(section5_json());
    CHECK(cfg.plant.n == 3);
    CHECK(cfg.exosystem.d == 2);
    CHECK(cfg.plant.A(0, 0) == 1.0);
    CHECK(cfg.identifier.mu == 0.9);
    CHECK(cfg.regulator.N_I == 70);
    CHECK(cfg.seed == 20250810);

    const std::string once = cfg::serialize_config(cfg);
    const auto cfg2 = cfg::parse_config(once);
    const std::string twice = cfg::serialize_config(cfg2);
    CHECK(once == twice);
    CHECK((cfg2.plant.A - cfg.plant.A).cwiseAbs().maxCoeff() == 0.0);
    CHECK((cfg2.exosystem.C_r - cfg.exosystem.C_r).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("malformed matrix rows are reported with their field path")
{
    std::string text = section5_json();
    const auto pos = text.find("[-1, 0, 1]");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 10, "[-1, 0]");
    try {
        cfg::parse_config(text);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("plant.A") != std::string::npos);
    }
}

TEST_CASE("missing fields are reported by name")
{
    try {
        cfg::parse_config("{\"plant\": {}}");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("plant.A") != std::string::npos);
    }
}

TEST_CASE("the synthesis weight has the configured block structure")
{
    const auto cfg = cfg::parse_config(section5_json());
    const Eigen::MatrixXd Q = cfg.synthesis_Q();
    CHECK(Q.rows() == 8);
    CHECK(Q(0, 0) == 10.0);
    CHECK(Q(1, 1) == 10.0);
    CHECK(Q(2, 2) == 1.0);
    CHECK(Q(7, 7) == 1.0);
    CHECK((Q - Eigen::MatrixXd(Q.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("seeded initial states are reproducible and stream-separated")
{
    const auto cfg = cfg::parse_config(section5_json());
    const Eigen::VectorXd a = cfg.draw_x0(0);
    const Eigen::VectorXd b = cfg.draw_x0(0);
    const Eigen::VectorXd c = cfg.draw_x0(1);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a - c).cwiseAbs().maxCoeff() > 0.0);
    CHECK(a.cwiseAbs().maxCoeff() <= 1.0);
}

TEST_CASE("dataset CSV round-trips at full precision")
{
    std::mt19937_64 rng(17);
    std::normal_distribution<double> gauss;
    sim::Dataset ds;
    ds.t0 = 0.0;
    ds.dt = 1e-3;
    ds.u.resize(257);
    ds.y.resize(257);
    for (Eigen::Index i = 0; i < ds.size(); ++i) {
        ds.u(i) = 1e5 * gauss(rng);
        ds.y(i) = gauss(rng) * 1e-7;
    }
    const auto path =
        (std::filesystem::temp_directory_path() / "regulab_ds_roundtrip.csv").string();
    csv::write_dataset(path, ds);
    const auto back = csv::read_dataset(path);
    CHECK(back.dt == ds.dt);
    CHECK((back.u - ds.u).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.y - ds.y).cwiseAbs().maxCoeff() == 0.0);
    std::filesystem::remove(path);
}

TEST_CASE("dataset reader rejects malformed files")
{
    const auto dir = std::filesystem::temp_directory_path();
    const auto bad_header = (dir / "regulab_bad_header.csv").string();
    {
        std::ofstream out(bad_header);
        out << "time,u,y\n0,0,0\n0.1,0,0\n";
    }
    CHECK_THROWS_AS(csv::read_dataset(bad_header), ConfigError);
    std::filesystem::remove(bad_header);

    const auto bad_grid = (dir / "regulab_bad_grid.csv").string();
    {
        std::ofstream out(bad_grid);
        out << "t,u,y\n0,0,0\n0.1,0,0\n0.35,0,0\n";
    }
    CHECK_THROWS_AS(csv::read_dataset(bad_grid), ConfigError);
    std::filesystem::remove(bad_grid);
}

TEST_CASE("gain CSV format")
{
    Eigen::RowVectorXd K(3);
    K << 1.5, -2.25, 1e-17;
    const auto path = (std::filesystem::temp_directory_path() / "regulab_gain.csv").string();
    csv::write_gain(path, K);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "index,value");
    std::getline(in, line);
    CHECK(line == "1,1.5");
    std::filesystem::remove(path);
}
