#include "regulab/csv.hpp"

#include "regulab/errors.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <vector>

namespace regulab::csv {

void write_dataset(const std::string& path, const sim::Dataset& ds)
{
    ds.validate();
    std::ofstream out(path);
    if (!out)
        throw ConfigError("write_dataset: cannot open " + path);
    out << "t,u,y\n";
    char buf[110];
    for (Eigen::Index i = 0; i < ds.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", ds.time(i), ds.u(i), ds.y(i));
        out << buf;
    }
}

sim::Dataset read_dataset(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("read_dataset: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != "t,u,y")
        throw ConfigError("read_dataset: expected header 't,u,y' in " + path);

    std::vector<double> t, u, y;
    size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty())
            continue;
        const char* p = line.c_str();
        char* end = nullptr;
        double vals[3];
        for (int k = 0; k < 3; ++k) {
            vals[k] = std::strtod(p, &end);
            if (end == p)
                throw ConfigError("read_dataset: parse error at " + path + ":" +
                                  std::to_string(lineno));
            p = end;
            if (k < 2) {
                if (*p != ',')
                    throw ConfigError("read_dataset: expected ',' at " + path + ":" +
                                      std::to_string(lineno));
                ++p;
            }
        }
        t.push_back(vals[0]);
        u.push_back(vals[1]);
        y.push_back(vals[2]);
    }
    if (t.size() < 2)
        throw ConfigError("read_dataset: fewer than two samples in " + path);

    sim::Dataset ds;
    ds.t0 = t.front();
    ds.dt = t[1] - t[0];
    if (!(ds.dt > 0.0))
        throw ConfigError("read_dataset: non-increasing time grid in " + path);
    for (size_t i = 1; i < t.size(); ++i) {
        const double expected = ds.t0 + ds.dt * static_cast<double>(i);
        if (std::abs(t[i] - expected) > 1e-9 * std::max(1.0, std::abs(expected)))
            throw ConfigError("read_dataset: non-uniform grid at row " + std::to_string(i));
    }
    ds.u = Eigen::Map<Eigen::VectorXd>(u.data(), static_cast<Eigen::Index>(u.size()));
    ds.y = Eigen::Map<Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
    return ds;
}

void write_gain(const std::string& path, const Eigen::RowVectorXd& K)
{
    std::ofstream out(path);
    if (!out)
        throw ConfigError("write_gain: cannot open " + path);
    out << "index,value\n";
    char buf[48];
    for (Eigen::Index i = 0; i < K.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%lld,%.17g\n", static_cast<long long>(i + 1), K(i));
        out << buf;
    }
}

} // namespace regulab::csv
