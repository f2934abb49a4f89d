#include "optexec/error.hpp"

namespace optexec {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::domain: return "domain";
        case ErrorKind::unsupported_regime: return "unsupported_regime";
        case ErrorKind::validation: return "validation";
        case ErrorKind::config: return "config";
        case ErrorKind::solver: return "solver";
        case ErrorKind::liquidity_violation: return "liquidity_violation";
        case ErrorKind::infeasible_liquidity: return "infeasible_liquidity";
        case ErrorKind::audit: return "audit";
    }
    return "unknown";
}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace optexec
