#include "regulab/commands.hpp"
#include "regulab/csv.hpp"
#include "regulab/errors.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <string>

namespace {

regulab::cfg::ExperimentConfig load(const std::string& config_path)
{
    auto config = regulab::cfg::load_config(config_path);
    if (const char* env = std::getenv("REGULAB_SEED")) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end == env || *end != '\0')
            throw regulab::ConfigError("REGULAB_SEED must be an unsigned integer");
        config.seed = v;
    }
    return config;
}

Eigen::VectorXd parse_theta(const std::string& text)
{
    Eigen::VectorXd theta(std::count(text.begin(), text.end(), ',') + 1);
    size_t pos = 0;
    Eigen::Index i = 0;
    while (true) {
        const size_t comma = text.find(',', pos);
        const std::string tok = text.substr(pos, comma == std::string::npos
                                                     ? std::string::npos
                                                     : comma - pos);
        try {
            theta(i++) = std::stod(tok);
        } catch (const std::exception&) {
            throw regulab::ConfigError("--theta: cannot parse component '" + tok + "'");
        }
        if (comma == std::string::npos)
            break;
        pos = comma + 1;
    }
    return theta;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"regulab: data-driven adaptive output regulation toolkit"};
    app.require_subcommand(1);

    std::string config_path, dataset_path, theta_text, out_dir = ".";

    auto attach_common = [&](CLI::App* sub, bool needs_dataset) {
        sub->add_option("--config", config_path, "experiment config (JSON)")->required();
        if (needs_dataset)
            sub->add_option("--dataset", dataset_path, "dataset CSV path")->required();
        sub->add_option("--out", out_dir, "output directory (default .)");
    };

    CLI::App* c_collect = app.add_subcommand("collect", "run the offline experiment");
    attach_common(c_collect, false);
    CLI::App* c_synth = app.add_subcommand("synthesize", "data-driven gain synthesis");
    attach_common(c_synth, true);
    c_synth->add_option("--theta", theta_text, "internal-model parameter a,b,...")
        ->required();
    CLI::App* c_reg = app.add_subcommand("regulate", "adaptive closed-loop run");
    attach_common(c_reg, true);
    CLI::App* c_verify = app.add_subcommand("verify", "model-based oracle diagnostics");
    attach_common(c_verify, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const auto config = load(config_path);
        if (c_collect->parsed()) {
            regulab::cmd::collect(config, out_dir, std::cout);
        } else if (c_synth->parsed()) {
            const auto ds = regulab::csv::read_dataset(dataset_path);
            regulab::cmd::synthesize(config, ds, parse_theta(theta_text), out_dir,
                                     std::cout);
        } else if (c_reg->parsed()) {
            const auto ds = regulab::csv::read_dataset(dataset_path);
            regulab::cmd::regulate(config, ds, out_dir, std::cout);
        } else if (c_verify->parsed()) {
            const auto rep = regulab::cmd::verify(config, std::cout);
            return rep.all_pass ? 0 : 3;
        }
        return 0;
    } catch (const regulab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const regulab::AssumptionError& e) {
        std::cerr << "assumption violation: " << e.what() << "\n";
        return 3;
    } catch (const regulab::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}
