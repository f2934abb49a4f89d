#pragma once

#include <string>
#include <vector>

#include "optexec/solver.hpp"

namespace optexec {

enum class Side { buy, sell };

std::string to_string(Side s);
Side parse_side(const std::string& s);

struct Fill {
    int t = 1;  ///< interval index, 1..T
    double price = 0.0;
    double qty = 0.0;
    Side side = Side::buy;
    std::string participant;
};

struct OrderContext {
    double arrival_price = 0.0;      ///< P_0
    double total_shares = 0.0;       ///< S-bar
    int horizon = 0;                 ///< T
    std::vector<double> price_path;  ///< P_0..P_T
};

struct AttributionReport {
    double shortfall = 0.0;
    double impact = 0.0;
    double timing = 0.0;
    double shortfall_bps = 0.0;
    double impact_bps = 0.0;
    double timing_bps = 0.0;
    Formulation formulation = Formulation::simple;
};

/// Sum S_t P_t - S P_0 for buys, S P_0 - sum S_t P_t for sells.
double shortfall(const OrderContext& ctx, const std::vector<Fill>& fills);

/// sum_t S_t sum_{j<=t} (P_j - P_{j-1}) from the price path, sign-adjusted for sells.
/// Equals shortfall() when fills execute at path prices.
double shortfall_nested(const OrderContext& ctx, const std::vector<Fill>& fills);

/// sum_t max(adverse step_t, 0) S_t.
double impact_simple(const OrderContext& ctx, const std::vector<Fill>& fills);

/// sum_t max(adverse step_t, 0) W_t, W_t the pre-trade residual.
double impact_complex(const OrderContext& ctx, const std::vector<Fill>& fills);

/// Impact counted only when the price sets a new adverse extreme relative to
/// P_0..P_{t-1}. Reported on request; not used by the zero-sum audit.
double impact_net_move(const OrderContext& ctx, const std::vector<Fill>& fills, Formulation f);

double timing(const OrderContext& ctx, const std::vector<Fill>& fills, Formulation f);

AttributionReport attribute(const OrderContext& ctx, const std::vector<Fill>& fills, Formulation f);

struct ParticipantAttribution {
    std::string participant;
    Side side = Side::buy;
    double total_shares = 0.0;
    AttributionReport report;
};

struct ZeroSumAudit {
    std::vector<ParticipantAttribution> participants;
    double total_impact = 0.0;
    double total_timing = 0.0;
    double scale = 0.0;  ///< sum over participants of S-bar P_0
    double tolerance = 1e-9;
    bool pass = false;
    Formulation formulation = Formulation::simple;
};

/// Per-participant attribution of a multi-participant fill set against a
/// common price path. Throws ErrorKind::audit naming the first interval whose
/// bought and sold quantities differ.
ZeroSumAudit zero_sum_audit(const std::vector<Fill>& fills, const std::vector<double>& price_path,
                            Formulation f, double tolerance = 1e-9);

/// Groups fills by participant, preserving first-appearance order.
std::vector<std::pair<std::string, std::vector<Fill>>> by_participant(const std::vector<Fill>& fills);

}  // namespace optexec
