#include "regulab/config.hpp"

#include "regulab/errors.hpp"

#include <json.hpp>

#include <fstream>
#include <random>
#include <sstream>

namespace regulab::cfg {

using nlohmann::json;

namespace {

json must_get(const json& j, const std::string& key, const std::string& path)
{
    if (!j.contains(key))
        throw ConfigError("config: missing field " + path + "." + key);
    return j.at(key);
}

Eigen::VectorXd parse_vector(const json& j, const std::string& path)
{
    if (!j.is_array())
        throw ConfigError("config: " + path + " must be an array");
    Eigen::VectorXd v(j.size());
    for (size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number())
            throw ConfigError("config: " + path + "[" + std::to_string(i) +
                              "] must be a number");
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return v;
}

Eigen::MatrixXd parse_matrix(const json& j, const std::string& path)
{
    if (!j.is_array() || j.empty())
        throw ConfigError("config: " + path + " must be a nonempty array of rows");
    const size_t cols = j[0].is_array() ? j[0].size() : 0;
    if (cols == 0)
        throw ConfigError("config: " + path + " rows must be nonempty arrays");
    Eigen::MatrixXd M(j.size(), cols);
    for (size_t r = 0; r < j.size(); ++r) {
        if (!j[r].is_array() || j[r].size() != cols)
            throw ConfigError("config: " + path + " row " + std::to_string(r) +
                              " has " + std::to_string(j[r].size()) +
                              " entries, expected " + std::to_string(cols));
        for (size_t c = 0; c < cols; ++c) {
            if (!j[r][c].is_number())
                throw ConfigError("config: " + path + "[" + std::to_string(r) + "][" +
                                  std::to_string(c) + "] must be a number");
            M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                j[r][c].get<double>();
        }
    }
    return M;
}

json vector_json(const Eigen::VectorXd& v)
{
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        a.push_back(v(i));
    return a;
}

json matrix_json(const Eigen::MatrixXd& M)
{
    json rows = json::array();
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < M.cols(); ++c)
            row.push_back(M(r, c));
        rows.push_back(row);
    }
    return rows;
}

} // namespace

void ExperimentConfig::validate() const
{
    plant.validate();
    exosystem.validate();
    filter.validate();
    excitation.validate();
    if (filter.n() != plant.n)
        throw ConfigError("config: filter order must equal the plant order n");
    if (identifier.theta0.size() != exosystem.d)
        throw ConfigError("config: identifier.theta0 must have the exosystem order d");
    theta_box().validate();
    if (!(sampling.t_star > 0.0 && sampling.tau_s > 0.0 && sampling.internal_h > 0.0))
        throw ConfigError("config: sampling periods must be positive");
    regulator_config().validate(exosystem.d);
}

Eigen::MatrixXd ExperimentConfig::synthesis_Q() const
{
    const int d = exosystem.d;
    const int n = plant.n;
    Eigen::VectorXd diag = Eigen::VectorXd::Ones(d + 2 * n);
    diag.head(d).setConstant(synthesis.eta_weight);
    return synthesis.Q_scale * Eigen::MatrixXd(diag.asDiagonal());
}

model::ThetaBox ExperimentConfig::theta_box() const
{
    return model::ThetaBox{identifier.box_lo, identifier.box_hi};
}

regulator::RegulatorConfig ExperimentConfig::regulator_config() const
{
    regulator::RegulatorConfig rc;
    rc.fp = filter;
    rc.box = theta_box();
    rc.theta0 = identifier.theta0;
    rc.mu = identifier.mu;
    rc.Q = synthesis_Q();
    rc.R = synthesis.R_scale;
    rc.T2 = regulator.T2;
    rc.N_I = regulator.N_I;
    rc.delta = regulator.delta;
    rc.tau_s = sampling.tau_s;
    rc.t_final = regulator.t_final;
    rc.flow_h = sampling.internal_h;
    return rc;
}

Eigen::VectorXd ExperimentConfig::draw_x0(std::uint64_t stream) const
{
    std::mt19937_64 rng(seed + stream);
    Eigen::VectorXd x0(plant.n);
    for (int i = 0; i < plant.n; ++i)
        x0(i) = sim::uniform_draw(rng(), -1.0, 1.0);
    return x0;
}

ExperimentConfig parse_config(const std::string& json_text)
{
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: JSON parse error: ") + e.what());
    }

    ExperimentConfig c;
    const json jp = must_get(j, "plant", "");
    c.plant.A = parse_matrix(must_get(jp, "A", "plant"), "plant.A");
    c.plant.B = parse_vector(must_get(jp, "B", "plant"), "plant.B");
    c.plant.C = parse_vector(must_get(jp, "C", "plant"), "plant.C").transpose();
    c.plant.n = static_cast<int>(c.plant.A.rows());

    const json je = must_get(j, "exosystem", "");
    c.exosystem.S = parse_matrix(must_get(je, "S", "exosystem"), "exosystem.S");
    c.exosystem.C_r =
        parse_vector(must_get(je, "C_r", "exosystem"), "exosystem.C_r").transpose();
    c.exosystem.w0 = parse_vector(must_get(je, "w0", "exosystem"), "exosystem.w0");
    c.exosystem.d = static_cast<int>(c.exosystem.S.rows());

    const json jf = must_get(j, "filter", "");
    c.filter.lambda = parse_vector(must_get(jf, "lambda", "filter"), "filter.lambda");
    c.filter.L = parse_vector(must_get(jf, "L", "filter"), "filter.L");

    const json jx = must_get(j, "excitation", "");
    c.excitation.amplitudes =
        parse_vector(must_get(jx, "amplitudes", "excitation"), "excitation.amplitudes");
    c.excitation.omega1 = must_get(jx, "omega1", "excitation").get<double>();

    const json js = must_get(j, "sampling", "");
    c.sampling.t_star = must_get(js, "t_star", "sampling").get<double>();
    c.sampling.tau_s = must_get(js, "tau_s", "sampling").get<double>();
    c.sampling.internal_h = must_get(js, "internal_h", "sampling").get<double>();

    const json ji = must_get(j, "identifier", "");
    c.identifier.mu = must_get(ji, "mu", "identifier").get<double>();
    c.identifier.theta0 =
        parse_vector(must_get(ji, "theta0", "identifier"), "identifier.theta0");
    c.identifier.box_lo =
        parse_vector(must_get(ji, "box_lo", "identifier"), "identifier.box_lo");
    c.identifier.box_hi =
        parse_vector(must_get(ji, "box_hi", "identifier"), "identifier.box_hi");

    const json jy = must_get(j, "synthesis", "");
    c.synthesis.Q_scale = must_get(jy, "Q_scale", "synthesis").get<double>();
    c.synthesis.R_scale = must_get(jy, "R_scale", "synthesis").get<double>();
    if (jy.contains("eta_weight"))
        c.synthesis.eta_weight = jy.at("eta_weight").get<double>();

    const json jr = must_get(j, "regulator", "");
    c.regulator.T2 = must_get(jr, "T2", "regulator").get<double>();
    c.regulator.N_I = must_get(jr, "N_I", "regulator").get<int>();
    c.regulator.delta = must_get(jr, "delta", "regulator").get<double>();
    if (jr.contains("t_final"))
        c.regulator.t_final = jr.at("t_final").get<double>();

    c.seed = must_get(j, "seed", "").get<std::uint64_t>();

    c.validate();
    return c;
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& c)
{
    json j;
    j["plant"] = {{"A", matrix_json(c.plant.A)},
                  {"B", vector_json(c.plant.B)},
                  {"C", vector_json(c.plant.C.transpose())}};
    j["exosystem"] = {{"S", matrix_json(c.exosystem.S)},
                      {"C_r", vector_json(c.exosystem.C_r.transpose())},
                      {"w0", vector_json(c.exosystem.w0)}};
    j["filter"] = {{"lambda", vector_json(c.filter.lambda)}, {"L", vector_json(c.filter.L)}};
    j["excitation"] = {{"amplitudes", vector_json(c.excitation.amplitudes)},
                       {"omega1", c.excitation.omega1}};
    j["sampling"] = {{"t_star", c.sampling.t_star},
                     {"tau_s", c.sampling.tau_s},
                     {"internal_h", c.sampling.internal_h}};
    j["identifier"] = {{"mu", c.identifier.mu},
                       {"theta0", vector_json(c.identifier.theta0)},
                       {"box_lo", vector_json(c.identifier.box_lo)},
                       {"box_hi", vector_json(c.identifier.box_hi)}};
    j["synthesis"] = {{"Q_scale", c.synthesis.Q_scale},
                      {"R_scale", c.synthesis.R_scale},
                      {"eta_weight", c.synthesis.eta_weight}};
    j["regulator"] = {{"T2", c.regulator.T2},
                      {"N_I", c.regulator.N_I},
                      {"delta", c.regulator.delta},
                      {"t_final", c.regulator.t_final}};
    j["seed"] = c.seed;
    return j.dump(2);
}

} // namespace regulab::cfg
