#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "optexec/error.hpp"

namespace optexec::cli {

/// 0 ok, 2 input, 3 solver, 4 audit.
int exit_code(ErrorKind kind);

/// Entry point shared by main() and the tests; args is the full argv.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

/// Selector: kernels, solvers, attribution, zero-sum or all. Throws
/// ErrorKind::config for an unknown selector.
std::vector<CheckResult> run_checks(const std::string& selector, const std::string& fixtures_dir);

}  // namespace optexec::cli
