#include <fmt/format.h>

#include "optexec/error.hpp"
#include "optexec/solver.hpp"

namespace optexec {

Solution solve(const ModelParams& params, const Horizon& h, const MarketState& s0, Formulation f,
               const SolverOptions& opt) {
    if (const auto* b = std::get_if<Benchmark>(&params))
        return f == Formulation::simple ? solve_benchmark_simple(*b, h, opt) : solve_benchmark_complex(*b, h, opt);
    const Ar1Extra* a = std::get_if<Ar1Extra>(&params);
    if (!a) a = std::get_if<Spread>(&params);
    if (a) {
        Solution sol = f == Formulation::simple ? solve_ar1_simple(*a, h, s0.aux, opt)
                                                : solve_ar1_complex(*a, h, s0.aux, opt);
        sol.policy.model = model_tag(params);
        return sol;
    }
    if (const auto* g = std::get_if<LinearPercentage>(&params)) {
        if (f != Formulation::simple)
            fail(ErrorKind::unsupported_regime,
                 "the linear-percentage model is solved for the simple formulation only");
        return solve_gbm_simple(*g, h, s0, opt);
    }
    return solve_liquidity(std::get<Liquidity>(params), h, s0, f, opt);
}

}  // namespace optexec
