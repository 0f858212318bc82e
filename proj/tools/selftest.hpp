#pragma once

#include <ostream>

namespace posyn::tools {

/// Simulates a small two-group cohort, runs the analysis on it and checks
/// the recovered structure against the generator. Prints one line per check.
bool run_selftest(std::ostream& out, bool quick);

}  // namespace posyn::tools
