#pragma once

/**
 * @file
 * @brief The `qctl` command-line front end.
 *
 * Subcommands: solve, sweep, simulate, validate. Exit codes: 0 success,
 * 1 malformed input, 2 solver infeasibility or mismatched instance/solution.
 * The default output directory is taken from QCTL_OUTPUT_DIR, else "qctl_out".
 */

#include "qctl/io.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace qctl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitMalformed = 1;
inline constexpr int kExitInfeasible = 2;

/// One row of summary.csv.
struct Summary
{
  double parameter;
  double cost;
  double entropy;
  double support_radius;
  double sparsity_count;
};

/**
 * @brief Scalar digest of a solved instance shared by solve and sweep.
 *
 * qkl/troc: expected cost from the initial distribution, initial-weighted
 * deformed q-entropy of the stage-0 policy, NaN radius, number of zero
 * stage-0 transition/action probabilities. qlqr: stage-0 tr(R~ Sigma) and
 * q-entropy, largest support half-width of the final-stage noise, zero sparsity.
 */
[[nodiscard]] Summary summarize(const io::LoadedInstance & loaded, double parameter);

/// Parses "a,b,c" or "start:stop:step" (inclusive of stop up to rounding).
[[nodiscard]] std::vector<double> parse_grid(const std::string & text);

int run(int argc, const char * const * argv, std::ostream & out, std::ostream & err);
int run(int argc, const char * const * argv);

}  // namespace qctl::cli
