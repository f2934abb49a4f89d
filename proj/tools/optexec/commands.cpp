#include "commands.hpp"

#include <cstdlib>
#include <filesystem>
#include <optional>
#include <ostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "optexec/attribution.hpp"
#include "optexec/io.hpp"
#include "optexec/simulate.hpp"
#include "optexec/solver.hpp"

namespace fs = std::filesystem;

namespace optexec::cli {

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::validation:
        case ErrorKind::config:
        case ErrorKind::domain: return 2;
        case ErrorKind::audit: return 4;
        case ErrorKind::solver:
        case ErrorKind::unsupported_regime:
        case ErrorKind::liquidity_violation:
        case ErrorKind::infeasible_liquidity: return 3;
    }
    return 3;
}

namespace {

constexpr const char* kManifest = "manifest.json";

fs::path output_dir(const std::string& flag) {
    fs::path dir = ".";
    if (!flag.empty()) dir = flag;
    else if (const char* env = std::getenv("OPTEXEC_OUTPUT_DIR"); env && *env) dir = env;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorKind::config, fmt::format("cannot create output directory {}: {}", dir.string(), ec.message()));
    return dir;
}

struct Outputs {
    fs::path dir;
    RunManifest manifest;

    void write(const std::string& name, const std::string& content) {
        write_file((dir / name).string(), content);
        manifest.outputs.push_back(name);
    }
    void finish() {
        manifest.finished_utc = utc_now();
        manifest.outputs.push_back(kManifest);
        write_file((dir / kManifest).string(), manifest_json(manifest));
    }
};

Outputs start(const std::string& command, const std::string& out_flag, const std::vector<std::string>& inputs,
              const std::string& digest_source) {
    Outputs o;
    o.manifest.command = command;
    o.manifest.started_utc = utc_now();
    o.manifest.library_version = version();
    o.manifest.inputs = inputs;
    o.manifest.config_digest = "sha256:" + sha256_hex(digest_source);
    o.dir = output_dir(out_flag);
    return o;
}

Solution solve_config(const RunConfig& c) {
    return solve(c.model, c.horizon, c.initial_state, c.formulation, c.solver);
}

int cmd_solve(const std::string& config_path, const std::string& out_flag, std::ostream& out) {
    const std::string text = read_file(config_path);
    const RunConfig c = parse_config(text);
    Outputs o = start("solve", out_flag, {config_path}, text);
    const Solution s = solve_config(c);
    o.write("schedule.csv", write_schedule_csv(s.schedule));
    o.write("policy.json", policy_json(s, kManifest));
    o.finish();
    out << fmt::format("value {}\n", format_number(s.value));
    for (const auto& w : s.warnings) out << "warning: " << w << "\n";
    return 0;
}

int cmd_attribute(const std::string& fills_path, const std::string& context_path, const std::string& formulation,
                  bool net_move, const std::string& out_flag, std::ostream& out) {
    const std::string fills_text = read_file(fills_path);
    const std::string ctx_text = read_file(context_path);
    const Formulation f = parse_formulation(formulation);
    const std::vector<Fill> fills = read_fills_csv(fills_text);
    const AttributionContext ctx = parse_context(ctx_text);
    if (fills.empty()) fail(ErrorKind::validation, "fills file has no rows");
    Outputs o = start("attribute", out_flag, {fills_path, context_path}, fills_text + ctx_text);

    AttributionOutput res;
    const auto groups = by_participant(fills);
    if (groups.size() > 1) {
        res.audit = zero_sum_audit(fills, ctx.price_path, f);
        res.has_audit = true;
        res.participants = res.audit.participants;
    } else {
        const auto& own = groups.front().second;
        double total = 0.0;
        for (const Fill& x : own) total += x.qty;
        const OrderContext oc{ctx.arrival_price, ctx.total_shares > 0.0 ? ctx.total_shares : total, ctx.horizon,
                              ctx.price_path};
        ParticipantAttribution pa;
        pa.participant = groups.front().first;
        pa.side = own.front().side;
        pa.total_shares = oc.total_shares;
        pa.report = attribute(oc, own, f);
        res.participants.push_back(pa);
    }
    if (net_move)
        for (const auto& [name, own] : groups) {
            double total = 0.0;
            for (const Fill& x : own) total += x.qty;
            const OrderContext oc{ctx.arrival_price, total, ctx.horizon, ctx.price_path};
            res.net_move_impact.push_back(impact_net_move(oc, own, f));
        }
    o.write("attribution.json", attribution_json(res, kManifest));
    o.finish();
    for (const auto& p : res.participants)
        out << fmt::format("{} {} shortfall {} impact {} timing {}\n", p.participant, to_string(p.side),
                           format_number(p.report.shortfall), format_number(p.report.impact),
                           format_number(p.report.timing));
    if (res.has_audit) {
        out << fmt::format("zero-sum total {} ({})\n", format_number(res.audit.total_impact + res.audit.total_timing),
                           res.audit.pass ? "pass" : "FAIL");
        if (!res.audit.pass) return 4;
    }
    return 0;
}

int cmd_simulate(const std::string& config_path, std::optional<std::uint64_t> seed, std::optional<std::size_t> paths,
                 const std::string& formulation, std::optional<int> threads, const std::string& out_flag,
                 std::ostream& out) {
    const std::string text = read_file(config_path);
    RunConfig c = parse_config(text);
    if (seed) c.simulation.seed = *seed;
    if (paths) {
        if (*paths < 1) fail(ErrorKind::validation, "--paths must be >= 1");
        c.simulation.n_paths = *paths;
    }
    if (!formulation.empty()) c.formulation = parse_formulation(formulation);
    if (threads) {
        if (*threads < 0) fail(ErrorKind::validation, "--threads must be >= 0");
        c.simulation.threads = *threads;
    }
    Outputs o = start("simulate", out_flag, {config_path}, text);
    o.manifest.seed = c.simulation.seed;
    const SimConfig sc = sim_config(c);
    CostDistribution d;
    switch (c.simulation.policy) {
        case PolicyChoice::optimal: d = evaluate_policy(sc, solve_config(c).policy, c.formulation); break;
        case PolicyChoice::equal_split:
            d = evaluate_policy(sc,
                                make_schedule(std::vector<double>(static_cast<std::size_t>(c.horizon.T),
                                                                  c.horizon.total_shares / c.horizon.T),
                                              c.horizon.total_shares),
                                c.formulation);
            break;
        case PolicyChoice::schedule:
            d = evaluate_policy(sc, make_schedule(c.simulation.schedule, c.horizon.total_shares), c.formulation);
            break;
    }
    o.write("distribution.json", distribution_json(d, c.initial_state.price, c.horizon.total_shares, kManifest));
    o.write("paths.csv", write_paths_csv(d));
    o.finish();
    out << fmt::format("paths {} excluded {} mean shortfall {} std {}\n", d.n_paths, d.excluded,
                       format_number(d.shortfall_summary.mean), format_number(d.shortfall_summary.std));
    return 0;
}

int cmd_verify(const std::string& selector, const std::string& fixtures, const std::string& out_flag,
               std::ostream& out) {
    const auto checks = run_checks(selector, fixtures);
    Outputs o = start("verify", out_flag, fixtures.empty() ? std::vector<std::string>{} : std::vector{fixtures},
                      selector);
    bool pass = true;
    nlohmann::ordered_json doc;
    doc["selector"] = selector;
    doc["checks"] = nlohmann::ordered_json::array();
    for (const auto& c : checks) {
        pass = pass && c.pass;
        out << fmt::format("{} {}: {}\n", c.pass ? "PASS" : "FAIL", c.name, c.detail);
        doc["checks"].push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    }
    doc["pass"] = pass;
    doc["manifest"] = kManifest;
    const std::string body = doc.dump(2) + "\n";
    o.write("verify.json", body);
    o.finish();
    out << (pass ? "all checks passed\n" : "some checks failed\n");
    return pass ? 0 : 4;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Optimal execution schedules and cost attribution", "optexec"};
    app.require_subcommand(1);
    app.set_version_flag("--version", version());

    std::string out_dir;
    auto* solve_cmd = app.add_subcommand("solve", "Solve for the optimal schedule and policy");
    std::string config;
    solve_cmd->add_option("config", config, "JSON configuration file")->required();
    solve_cmd->add_option("--out", out_dir, "Output directory");

    auto* attr_cmd = app.add_subcommand("attribute", "Attribute shortfall into impact and timing");
    std::string fills, context, formulation = "simple";
    bool net_move = false;
    attr_cmd->add_option("fills", fills, "Fills CSV")->required();
    attr_cmd->add_option("context", context, "Order context JSON")->required();
    attr_cmd->add_option("--formulation", formulation, "simple or complex");
    attr_cmd->add_flag("--net-move", net_move, "Also report impact counted on new adverse levels only");
    attr_cmd->add_option("--out", out_dir, "Output directory");

    auto* sim_cmd = app.add_subcommand("simulate", "Simulate the cost distribution of a policy");
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> paths;
    std::optional<int> threads;
    std::string sim_formulation;
    sim_cmd->add_option("config", config, "JSON configuration file")->required();
    sim_cmd->add_option("--seed", seed, "Override simulation.seed");
    sim_cmd->add_option("--paths", paths, "Override simulation.n_paths");
    sim_cmd->add_option("--formulation", sim_formulation, "Override formulation");
    sim_cmd->add_option("--threads", threads, "Worker threads, 0 for all cores");
    sim_cmd->add_option("--out", out_dir, "Output directory");

    auto* verify_cmd = app.add_subcommand("verify", "Run built-in consistency checks");
    std::string selector, fixtures;
    verify_cmd->add_option("selector", selector, "kernels, solvers, attribution, zero-sum or all")->required();
    verify_cmd->add_option("--fixtures", fixtures, "Directory of zero-sum fixtures");
    verify_cmd->add_option("--out", out_dir, "Output directory");

    // args[0] is the program name.
    std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << version() << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (*solve_cmd) return cmd_solve(config, out_dir, out);
        if (*attr_cmd) return cmd_attribute(fills, context, formulation, net_move, out_dir, out);
        if (*sim_cmd) return cmd_simulate(config, seed, paths, sim_formulation, threads, out_dir, out);
        if (*verify_cmd) return cmd_verify(selector, fixtures, out_dir, out);
    } catch (const Error& e) {
        err << "error [" << to_string(e.kind()) << "]: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}

}  // namespace optexec::cli
