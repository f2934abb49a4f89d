#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "optexec/attribution.hpp"
#include "optexec/simulate.hpp"
#include "optexec/solver.hpp"

namespace optexec {

/// Library version string.
std::string version();

enum class PolicyChoice { optimal, equal_split, schedule };

struct SimulationSection {
    std::size_t n_paths = 10000;
    std::uint64_t seed = 1;
    int threads = 0;
    Side side = Side::buy;
    PolicyChoice policy = PolicyChoice::optimal;
    std::vector<double> schedule;  ///< used when policy == schedule
};

struct RunConfig {
    ModelParams model = Benchmark{};
    Horizon horizon;
    Formulation formulation = Formulation::simple;
    MarketState initial_state;
    SolverOptions solver;
    SimulationSection simulation;
};

/// Strict parse: unknown keys, wrong types and invalid values raise
/// ErrorKind::config or ErrorKind::validation with the JSON field path.
RunConfig parse_config(const std::string& json_text);

/// Every field written, defaults included; parse_config(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& c);

SimConfig sim_config(const RunConfig& c);

/// Shortest decimal string that parses back to the same double.
std::string format_number(double x);

// ---- CSV ----

/// Header `t,participant,side,qty,price`. Errors name the line.
std::vector<Fill> read_fills_csv(const std::string& text);
std::string write_fills_csv(const std::vector<Fill>& fills);

/// Header `t,S_t,W_t`, one row per stage.
std::string write_schedule_csv(const Schedule& s);
Schedule read_schedule_csv(const std::string& text);

/// Header `path,status,shortfall,impact,timing,side_return,price_cov`; excluded
/// paths leave the numeric fields empty.
std::string write_paths_csv(const CostDistribution& d);

// ---- JSON documents ----

struct AttributionContext {
    double arrival_price = 0.0;
    double total_shares = 0.0;  ///< 0 when absent
    int horizon = 0;
    std::vector<double> price_path;
};

AttributionContext parse_context(const std::string& json_text);
std::string serialize_context(const AttributionContext& c);

std::string policy_json(const Solution& s, const std::string& manifest);
PolicyTable parse_policy(const std::string& json_text);

std::string distribution_json(const CostDistribution& d, double arrival_price, double total_shares,
                              const std::string& manifest);

struct AttributionOutput {
    std::vector<ParticipantAttribution> participants;
    std::vector<double> net_move_impact;  ///< per participant
    bool has_audit = false;
    ZeroSumAudit audit;
};

std::string attribution_json(const AttributionOutput& out, const std::string& manifest);

struct RunManifest {
    std::string command;
    std::string config_digest;  ///< "sha256:<hex>" of the input file bytes
    std::uint64_t seed = 0;
    std::string library_version;
    std::string started_utc, finished_utc;
    std::vector<std::string> inputs, outputs;
};

std::string manifest_json(const RunManifest& m);
std::string sha256_hex(const std::string& bytes);
std::string utc_now();

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace optexec
