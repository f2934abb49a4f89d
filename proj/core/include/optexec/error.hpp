#pragma once

#include <stdexcept>
#include <string>

namespace optexec {

enum class ErrorKind {
    domain,
    unsupported_regime,
    validation,
    config,
    solver,
    liquidity_violation,
    infeasible_liquidity,
    audit,
};

const char* to_string(ErrorKind kind);

/// Single exception type for the library; `kind` drives CLI exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

}  // namespace optexec
