#pragma once

#include "regulab/config.hpp"
#include "regulab/regulator.hpp"
#include "regulab/sim.hpp"
#include "regulab/synth.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace regulab::cmd {

/// collect: run the offline experiment, print the Assumption 1 check, write
/// dataset.csv under out_dir, and return the dataset.
sim::Dataset collect(const cfg::ExperimentConfig& config, const std::string& out_dir,
                     std::ostream& out);

/// synthesize: post-process the dataset for theta, synthesize a gain, print
/// the gain / closed-loop eigenvalues / CARE residual, write gain.csv.
/// theta outside the identifier box is a warning, not an error.
synth::SynthesisResult synthesize(const cfg::ExperimentConfig& config,
                                  const sim::Dataset& ds, const Eigen::VectorXd& theta,
                                  const std::string& out_dir, std::ostream& out);

/// regulate: full adaptive run; writes trace.csv and jumps.csv; prints the
/// final theta, the mean |e| over the last 10%, and the stop reason.
regulator::RunLog regulate(const cfg::ExperimentConfig& config, const sim::Dataset& ds,
                           const std::string& out_dir, std::ostream& out);

struct VerifyLine {
    std::string check;
    double value = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct VerifyReport {
    std::vector<VerifyLine> lines;
    bool all_pass = true;
};

/// verify: model-based oracle diagnostics (uses the true plant): the filter
/// representation residuals, transverse coupling identity, steady-state
/// Sylvester residuals, structural and non-resonance checks.
VerifyReport verify(const cfg::ExperimentConfig& config, std::ostream& out);

double mean_abs_error_tail(const regulator::RunLog& log, double fraction = 0.1);

} // namespace regulab::cmd
