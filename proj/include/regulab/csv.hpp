#pragma once

#include "regulab/sim.hpp"

#include <Eigen/Dense>

#include <string>

namespace regulab::csv {

/// Header `t,u,y`, one row per sample, 17 significant digits.
void write_dataset(const std::string& path, const sim::Dataset& ds);

/// Parses a dataset written by write_dataset; validates the uniform grid.
sim::Dataset read_dataset(const std::string& path);

/// Header `index,value`, one row per gain entry.
void write_gain(const std::string& path, const Eigen::RowVectorXd& K);

} // namespace regulab::csv
