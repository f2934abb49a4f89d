#include "optexec/io.hpp"

#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "json.hpp"
#include "optexec/error.hpp"

#ifndef OPTEXEC_VERSION
#define OPTEXEC_VERSION "0.0.0"
#endif

namespace optexec {

using json = nlohmann::ordered_json;

std::string version() { return OPTEXEC_VERSION; }

namespace {

// Strict reader over one JSON object: tracks consumed keys so leftovers can
// be reported with their full path.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail(ErrorKind::config, fmt::format("{} must be an object", where()));
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    const json& at(const std::string& key) {
        if (!j_.contains(key)) fail(ErrorKind::config, fmt::format("{} is required", child(key)));
        seen_.insert(key);
        return j_.at(key);
    }

    double number(const std::string& key) {
        const json& v = at(key);
        if (!v.is_number()) fail(ErrorKind::config, fmt::format("{} must be a number", child(key)));
        return v.get<double>();
    }
    double number(const std::string& key, double def) { return has(key) ? number(key) : def; }

    std::int64_t integer(const std::string& key) {
        const json& v = at(key);
        if (!v.is_number_integer()) fail(ErrorKind::config, fmt::format("{} must be an integer", child(key)));
        return v.get<std::int64_t>();
    }
    std::int64_t integer(const std::string& key, std::int64_t def) { return has(key) ? integer(key) : def; }

    std::uint64_t unsigned_integer(const std::string& key, std::uint64_t def) {
        if (!has(key)) return def;
        const json& v = at(key);
        if (!v.is_number_unsigned()) fail(ErrorKind::config, fmt::format("{} must be a nonnegative integer", child(key)));
        return v.get<std::uint64_t>();
    }

    std::string string(const std::string& key) {
        const json& v = at(key);
        if (!v.is_string()) fail(ErrorKind::config, fmt::format("{} must be a string", child(key)));
        return v.get<std::string>();
    }
    std::string string(const std::string& key, const std::string& def) { return has(key) ? string(key) : def; }

    std::vector<double> numbers(const std::string& key) {
        const json& v = at(key);
        if (!v.is_array()) fail(ErrorKind::config, fmt::format("{} must be an array of numbers", child(key)));
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number()) fail(ErrorKind::config, fmt::format("{}[{}] must be a number", child(key), i));
            out.push_back(v[i].get<double>());
        }
        return out;
    }

    Reader object(const std::string& key) { return Reader(at(key), child(key)); }

    std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    std::string where() const { return path_.empty() ? "document" : path_; }

    void finish() const {
        for (const auto& [k, v] : j_.items())
            if (!seen_.count(k)) fail(ErrorKind::config, fmt::format("{} is not a recognised field", child(k)));
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

json parse_json(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorKind::config, fmt::format("malformed JSON: {}", e.what()));
    }
}

json number_json(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json numbers_json(const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(number_json(x));
    return a;
}

ModelParams parse_model(Reader r) {
    const std::string type = r.string("type");
    ModelParams out;
    auto ar1 = [&](Ar1Extra& m) {
        m.theta = r.number("theta");
        m.gamma = r.number("gamma");
        m.rho = r.number("rho");
        m.sigma_eps = r.number("sigma_eps");
        m.sigma_eta = r.number("sigma_eta");
    };
    if (type == "benchmark") {
        Benchmark m;
        m.theta = r.number("theta");
        m.sigma_eps = r.number("sigma_eps");
        out = m;
    } else if (type == "ar1") {
        Ar1Extra m;
        ar1(m);
        out = m;
    } else if (type == "spread") {
        Spread m;
        ar1(m);
        out = m;
    } else if (type == "linear_percentage") {
        LinearPercentage m;
        m.mu_B = r.number("mu_B");
        m.sigma_B = r.number("sigma_B");
        m.theta = r.number("theta");
        m.gamma = r.number("gamma");
        m.rho = r.number("rho");
        m.sigma_eta = r.number("sigma_eta");
        out = m;
    } else if (type == "liquidity") {
        out = make_liquidity(r.number("alpha"), r.number("theta"), r.number("gamma"), r.number("rho"),
                             r.number("sigma_eps"), r.number("sigma_eta"));
    } else {
        fail(ErrorKind::config, fmt::format("{} = '{}' is not a known model", r.child("type"), type));
    }
    r.finish();
    return out;
}

json model_json(const ModelParams& p) {
    json j;
    j["type"] = model_tag(p);
    auto ar1 = [&](const Ar1Extra& m) {
        j["theta"] = m.theta;
        j["gamma"] = m.gamma;
        j["rho"] = m.rho;
        j["sigma_eps"] = m.sigma_eps;
        j["sigma_eta"] = m.sigma_eta;
    };
    if (const auto* b = std::get_if<Benchmark>(&p)) {
        j["theta"] = b->theta;
        j["sigma_eps"] = b->sigma_eps;
    } else if (const auto* a = std::get_if<Ar1Extra>(&p)) {
        ar1(*a);
    } else if (const auto* s = std::get_if<Spread>(&p)) {
        ar1(*s);
    } else if (const auto* g = std::get_if<LinearPercentage>(&p)) {
        j["mu_B"] = g->mu_B;
        j["sigma_B"] = g->sigma_B;
        j["theta"] = g->theta;
        j["gamma"] = g->gamma;
        j["rho"] = g->rho;
        j["sigma_eta"] = g->sigma_eta;
    } else if (const auto* l = std::get_if<Liquidity>(&p)) {
        j["alpha"] = l->alpha;
        j["theta"] = l->theta;
        j["gamma"] = l->gamma;
        j["rho"] = l->rho;
        j["sigma_eps"] = l->sigma_eps;
        j["sigma_eta"] = l->sigma_eta;
    }
    return j;
}

std::string policy_choice_name(PolicyChoice p) {
    switch (p) {
        case PolicyChoice::optimal: return "optimal";
        case PolicyChoice::equal_split: return "equal_split";
        case PolicyChoice::schedule: return "schedule";
    }
    return "optimal";
}

int to_int(std::int64_t v, const std::string& path) {
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
        fail(ErrorKind::config, fmt::format("{} = {} is out of range", path, v));
    return int(v);
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    const json doc = parse_json(text);
    Reader root(doc, "");
    RunConfig c;
    c.model = parse_model(root.object("model"));
    {
        Reader h = root.object("horizon");
        c.horizon.T = to_int(h.integer("T"), "horizon.T");
        c.horizon.total_shares = h.number("total_shares");
        h.finish();
    }
    if (root.has("formulation")) {
        try {
            c.formulation = parse_formulation(root.string("formulation"));
        } catch (const Error& e) {
            fail(ErrorKind::validation, fmt::format("formulation: {}", e.what()));
        }
    }
    if (root.has("initial_state")) {
        Reader s = root.object("initial_state");
        c.initial_state.price = s.number("price", c.initial_state.price);
        c.initial_state.no_impact_price = s.number("no_impact_price", c.initial_state.price);
        c.initial_state.aux = s.number("aux", c.initial_state.aux);
        s.finish();
    }
    if (root.has("solver")) {
        Reader s = root.object("solver");
        SolverOptions& o = c.solver;
        o.grid_nodes = to_int(s.integer("grid_nodes", o.grid_nodes), "solver.grid_nodes");
        o.grid_min_fraction = s.number("grid_min_fraction", o.grid_min_fraction);
        o.quadrature_order = to_int(s.integer("quadrature_order", o.quadrature_order), "solver.quadrature_order");
        o.recursion_quadrature_order = to_int(s.integer("recursion_quadrature_order", o.recursion_quadrature_order),
                                              "solver.recursion_quadrature_order");
        o.state_nodes = to_int(s.integer("state_nodes", o.state_nodes), "solver.state_nodes");
        o.liquidity_state_nodes =
            to_int(s.integer("liquidity_state_nodes", o.liquidity_state_nodes), "solver.liquidity_state_nodes");
        o.state_width_sd = s.number("state_width_sd", o.state_width_sd);
        o.root_tol = s.number("root_tol", o.root_tol);
        o.max_iter = to_int(s.integer("max_iter", o.max_iter), "solver.max_iter");
        o.regression_samples = to_int(s.integer("regression_samples", o.regression_samples), "solver.regression_samples");
        o.regression_w_nodes = to_int(s.integer("regression_w_nodes", o.regression_w_nodes), "solver.regression_w_nodes");
        o.regression_seed = s.unsigned_integer("regression_seed", o.regression_seed);
        o.threads = to_int(s.integer("threads", o.threads), "solver.threads");
        o.resolution_tol = s.number("resolution_tol", o.resolution_tol);
        s.finish();
        if (o.quadrature_order < 1 || o.quadrature_order > 128)
            fail(ErrorKind::validation, "solver.quadrature_order must be in 1..128");
        if (o.recursion_quadrature_order < 1 || o.recursion_quadrature_order > 128)
            fail(ErrorKind::validation, "solver.recursion_quadrature_order must be in 1..128");
        if (o.state_nodes < 1) fail(ErrorKind::validation, "solver.state_nodes must be >= 1");
        if (o.liquidity_state_nodes < 1) fail(ErrorKind::validation, "solver.liquidity_state_nodes must be >= 1");
        if (!(o.root_tol > 0.0)) fail(ErrorKind::validation, "solver.root_tol must be > 0");
        if (o.max_iter < 1) fail(ErrorKind::validation, "solver.max_iter must be >= 1");
        if (o.threads < 0) fail(ErrorKind::validation, "solver.threads must be >= 0");
    }
    if (root.has("simulation")) {
        Reader s = root.object("simulation");
        SimulationSection& m = c.simulation;
        const std::int64_t n = s.integer("n_paths", std::int64_t(m.n_paths));
        if (n < 1) fail(ErrorKind::validation, "simulation.n_paths must be >= 1");
        m.n_paths = std::size_t(n);
        m.seed = s.unsigned_integer("seed", m.seed);
        m.threads = to_int(s.integer("threads", m.threads), "simulation.threads");
        if (m.threads < 0) fail(ErrorKind::validation, "simulation.threads must be >= 0");
        try {
            m.side = parse_side(s.string("side", to_string(m.side)));
        } catch (const Error& e) {
            fail(ErrorKind::validation, fmt::format("simulation.side: {}", e.what()));
        }
        const std::string p = s.string("policy", policy_choice_name(m.policy));
        if (p == "optimal") m.policy = PolicyChoice::optimal;
        else if (p == "equal_split") m.policy = PolicyChoice::equal_split;
        else if (p == "schedule") m.policy = PolicyChoice::schedule;
        else fail(ErrorKind::validation, fmt::format("simulation.policy = '{}' is not optimal, equal_split or schedule", p));
        if (s.has("schedule")) m.schedule = s.numbers("schedule");
        s.finish();
        if (m.policy == PolicyChoice::schedule && m.schedule.empty())
            fail(ErrorKind::validation, "simulation.schedule is required when simulation.policy is 'schedule'");
    }
    root.finish();

    validate(c.model);
    validate(c.horizon);
    if (!(c.initial_state.price > 0.0)) fail(ErrorKind::validation, "initial_state.price must be > 0");
    if (!(c.initial_state.no_impact_price > 0.0))
        fail(ErrorKind::validation, "initial_state.no_impact_price must be > 0");
    if (c.simulation.policy == PolicyChoice::schedule) {
        if (c.simulation.schedule.size() != static_cast<std::size_t>(c.horizon.T))
            fail(ErrorKind::validation, fmt::format("simulation.schedule has {} entries, horizon.T is {}",
                                                    c.simulation.schedule.size(), c.horizon.T));
        validate(make_schedule(c.simulation.schedule, c.horizon.total_shares), c.horizon);
    }
    return c;
}

std::string serialize_config(const RunConfig& c) {
    json j;
    j["model"] = model_json(c.model);
    j["horizon"] = {{"T", c.horizon.T}, {"total_shares", c.horizon.total_shares}};
    j["formulation"] = to_string(c.formulation);
    j["initial_state"] = {{"price", c.initial_state.price},
                          {"no_impact_price", c.initial_state.no_impact_price},
                          {"aux", c.initial_state.aux}};
    const SolverOptions& o = c.solver;
    j["solver"] = {{"grid_nodes", o.grid_nodes},
                   {"grid_min_fraction", o.grid_min_fraction},
                   {"quadrature_order", o.quadrature_order},
                   {"recursion_quadrature_order", o.recursion_quadrature_order},
                   {"state_nodes", o.state_nodes},
                   {"liquidity_state_nodes", o.liquidity_state_nodes},
                   {"state_width_sd", o.state_width_sd},
                   {"root_tol", o.root_tol},
                   {"max_iter", o.max_iter},
                   {"regression_samples", o.regression_samples},
                   {"regression_w_nodes", o.regression_w_nodes},
                   {"regression_seed", o.regression_seed},
                   {"threads", o.threads},
                   {"resolution_tol", o.resolution_tol}};
    const SimulationSection& s = c.simulation;
    j["simulation"] = {{"n_paths", s.n_paths},   {"seed", s.seed},
                       {"threads", s.threads},   {"side", to_string(s.side)},
                       {"policy", policy_choice_name(s.policy)}, {"schedule", s.schedule}};
    return j.dump(2) + "\n";
}

SimConfig sim_config(const RunConfig& c) {
    SimConfig s;
    s.model = c.model;
    s.horizon = c.horizon;
    s.n_paths = c.simulation.n_paths;
    s.seed = c.simulation.seed;
    s.initial_state = c.initial_state;
    s.side = c.simulation.side;
    s.threads = c.simulation.threads;
    return s;
}

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

// ---- CSV ----

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        out.push_back(line);
    }
    while (!out.empty() && out.back().empty()) out.pop_back();
    return out;
}

double parse_double(const std::string& s, std::size_t line, const char* column) {
    double v = 0.0;
    const char* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, v);
    if (s.empty() || res.ec != std::errc() || res.ptr != end)
        fail(ErrorKind::validation, fmt::format("line {}: {} '{}' is not a number", line, column, s));
    return v;
}

long long parse_integer(const std::string& s, std::size_t line, const char* column) {
    long long v = 0;
    const char* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, v);
    if (s.empty() || res.ec != std::errc() || res.ptr != end)
        fail(ErrorKind::validation, fmt::format("line {}: {} '{}' is not an integer", line, column, s));
    return v;
}

}  // namespace

std::vector<Fill> read_fills_csv(const std::string& text) {
    std::string body = text;
    if (body.rfind("\xEF\xBB\xBF", 0) == 0) body.erase(0, 3);
    const auto rows = lines(body);
    if (rows.empty() || rows[0] != "t,participant,side,qty,price")
        fail(ErrorKind::validation,
             fmt::format("line 1: header must be exactly 't,participant,side,qty,price', got '{}'",
                         rows.empty() ? std::string() : rows[0]));
    std::vector<Fill> fills;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const std::size_t ln = i + 1;
        const auto f = split(rows[i], ',');
        if (f.size() != 5) fail(ErrorKind::validation, fmt::format("line {}: expected 5 fields, got {}", ln, f.size()));
        Fill x;
        const long long t = parse_integer(f[0], ln, "t");
        if (t < 1 || t > std::numeric_limits<int>::max())
            fail(ErrorKind::validation, fmt::format("line {}: t = {} must be >= 1", ln, t));
        x.t = int(t);
        if (f[1].empty()) fail(ErrorKind::validation, fmt::format("line {}: participant is empty", ln));
        x.participant = f[1];
        if (f[2] == "buy") x.side = Side::buy;
        else if (f[2] == "sell") x.side = Side::sell;
        else fail(ErrorKind::validation, fmt::format("line {}: side '{}' is not buy or sell", ln, f[2]));
        x.qty = parse_double(f[3], ln, "qty");
        x.price = parse_double(f[4], ln, "price");
        if (!(x.qty > 0.0) || !std::isfinite(x.qty))
            fail(ErrorKind::validation, fmt::format("line {}: qty must be > 0", ln));
        if (!(x.price > 0.0) || !std::isfinite(x.price))
            fail(ErrorKind::validation, fmt::format("line {}: price must be > 0", ln));
        fills.push_back(std::move(x));
    }
    return fills;
}

std::string write_fills_csv(const std::vector<Fill>& fills) {
    std::string out = "t,participant,side,qty,price\n";
    for (const Fill& f : fills)
        out += fmt::format("{},{},{},{},{}\n", f.t, f.participant, to_string(f.side), format_number(f.qty),
                           format_number(f.price));
    return out;
}

std::string write_schedule_csv(const Schedule& s) {
    std::string out = "t,S_t,W_t\n";
    for (std::size_t i = 0; i < s.trades.size(); ++i)
        out += fmt::format("{},{},{}\n", i + 1, format_number(s.trades[i]), format_number(s.residuals[i]));
    return out;
}

Schedule read_schedule_csv(const std::string& text) {
    const auto rows = lines(text);
    if (rows.empty() || rows[0] != "t,S_t,W_t")
        fail(ErrorKind::validation, "line 1: header must be exactly 't,S_t,W_t'");
    Schedule s;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto f = split(rows[i], ',');
        if (f.size() != 3) fail(ErrorKind::validation, fmt::format("line {}: expected 3 fields", i + 1));
        if (parse_integer(f[0], i + 1, "t") != static_cast<long long>(i))
            fail(ErrorKind::validation, fmt::format("line {}: t out of sequence", i + 1));
        s.trades.push_back(parse_double(f[1], i + 1, "S_t"));
        s.residuals.push_back(parse_double(f[2], i + 1, "W_t"));
    }
    s.residuals.push_back(0.0);
    return s;
}

std::string write_paths_csv(const CostDistribution& d) {
    std::string out = "path,status,shortfall,impact,timing,side_return,price_cov\n";
    out.reserve(out.size() + d.n_paths * 96);
    for (std::size_t i = 0; i < d.n_paths; ++i) {
        if (d.status[i] != PathStatus::ok) {
            out += fmt::format("{},{},,,,,\n", i, to_string(d.status[i]));
            continue;
        }
        out += fmt::format("{},ok,{},{},{},{},{}\n", i, format_number(d.shortfall[i]), format_number(d.impact[i]),
                           format_number(d.timing[i]), format_number(d.side_return[i]),
                           format_number(d.price_cov[i]));
    }
    return out;
}

// ---- JSON documents ----

AttributionContext parse_context(const std::string& text) {
    const json doc = parse_json(text);
    Reader r(doc, "context");
    AttributionContext c;
    c.arrival_price = r.number("arrival_price");
    c.total_shares = r.number("total_shares", 0.0);
    c.horizon = to_int(r.integer("horizon"), "context.horizon");
    c.price_path = r.numbers("price_path");
    r.finish();
    if (!(c.arrival_price > 0.0)) fail(ErrorKind::validation, "context.arrival_price must be > 0");
    if (c.total_shares < 0.0) fail(ErrorKind::validation, "context.total_shares must be >= 0");
    if (c.horizon < 1) fail(ErrorKind::validation, "context.horizon must be >= 1");
    if (c.price_path.size() != static_cast<std::size_t>(c.horizon) + 1)
        fail(ErrorKind::validation, fmt::format("context.price_path has {} entries, expected horizon + 1 = {}",
                                                c.price_path.size(), c.horizon + 1));
    if (c.price_path[0] != c.arrival_price)
        fail(ErrorKind::validation, "context.price_path[0] must equal context.arrival_price");
    return c;
}

std::string serialize_context(const AttributionContext& c) {
    json j;
    j["arrival_price"] = c.arrival_price;
    if (c.total_shares > 0.0) j["total_shares"] = c.total_shares;
    j["horizon"] = c.horizon;
    j["price_path"] = c.price_path;
    return j.dump(2) + "\n";
}

namespace {

json stage_json(int t, const StagePolicy& p) {
    json j;
    j["t"] = t;
    if (const auto* c = std::get_if<ClosedLinearPolicy>(&p)) {
        j["type"] = "closed_linear";
        j["fraction"] = c->fraction;
    } else if (const auto* n = std::get_if<NumericalPolicy>(&p)) {
        j["type"] = "numerical";
        j["w_nodes"] = numbers_json(n->w_nodes);
        json axes = json::array();
        for (const auto& a : n->axes) axes.push_back({{"name", a.name}, {"nodes", numbers_json(a.nodes)}});
        j["axes"] = axes;
        j["fractions"] = numbers_json(n->fractions);
    } else if (const auto* g = std::get_if<RegressionPolicy>(&p)) {
        j["type"] = "regression";
        j["basis"] = {"1", "r", "x", "r^2", "r*x", "x^2"};
        j["w_nodes"] = numbers_json(g->w_nodes);
        json coef = json::array();
        for (const auto& c : g->coefficients) coef.push_back(numbers_json(c));
        j["coefficients"] = coef;
    }
    return j;
}

StagePolicy parse_stage(Reader r) {
    const std::string type = r.string("type");
    r.integer("t");
    StagePolicy out;
    if (type == "closed_linear") {
        out = ClosedLinearPolicy{r.number("fraction")};
    } else if (type == "numerical") {
        NumericalPolicy n;
        n.w_nodes = r.numbers("w_nodes");
        const json& axes = r.at("axes");
        if (!axes.is_array()) fail(ErrorKind::config, fmt::format("{} must be an array", r.child("axes")));
        for (std::size_t i = 0; i < axes.size(); ++i) {
            Reader a(axes[i], fmt::format("{}[{}]", r.child("axes"), i));
            n.axes.push_back({a.string("name"), a.numbers("nodes")});
            a.finish();
        }
        n.fractions = r.numbers("fractions");
        out = std::move(n);
    } else if (type == "regression") {
        RegressionPolicy g;
        r.at("basis");
        g.w_nodes = r.numbers("w_nodes");
        const json& coef = r.at("coefficients");
        for (const auto& row : coef) g.coefficients.push_back(row.get<std::vector<double>>());
        out = std::move(g);
    } else {
        fail(ErrorKind::config, fmt::format("{} = '{}' is not a known stage type", r.child("type"), type));
    }
    r.finish();
    return out;
}

}  // namespace

std::string policy_json(const Solution& s, const std::string& manifest) {
    json j;
    j["model"] = s.policy.model;
    j["formulation"] = to_string(s.policy.formulation);
    j["value"] = number_json(s.value);
    j["warnings"] = s.warnings;
    json stages = json::array();
    for (std::size_t i = 0; i < s.policy.stages.size(); ++i) stages.push_back(stage_json(int(i) + 1, s.policy.stages[i]));
    j["stages"] = stages;
    json vs = json::array();
    for (std::size_t i = 0; i < s.policy.value_samples.size(); ++i) {
        std::vector<double> w, v;
        for (const auto& x : s.policy.value_samples[i]) {
            w.push_back(x.w);
            v.push_back(x.v);
        }
        vs.push_back({{"t", i + 1}, {"w", numbers_json(w)}, {"v", numbers_json(v)}});
    }
    j["value_samples"] = vs;
    j["manifest"] = manifest;
    return j.dump(2) + "\n";
}

PolicyTable parse_policy(const std::string& text) {
    const json doc = parse_json(text);
    Reader r(doc, "");
    PolicyTable p;
    p.model = r.string("model");
    p.formulation = parse_formulation(r.string("formulation"));
    const json& stages = r.at("stages");
    for (std::size_t i = 0; i < stages.size(); ++i) p.stages.push_back(parse_stage(Reader(stages[i], fmt::format("stages[{}]", i))));
    if (r.has("value_samples")) {
        const json& vs = r.at("value_samples");
        for (std::size_t i = 0; i < vs.size(); ++i) {
            Reader s(vs[i], fmt::format("value_samples[{}]", i));
            s.integer("t");
            const auto w = s.numbers("w"), v = s.numbers("v");
            s.finish();
            std::vector<ValueSample> row;
            for (std::size_t k = 0; k < std::min(w.size(), v.size()); ++k) row.push_back({w[k], v[k]});
            p.value_samples.push_back(std::move(row));
        }
    }
    for (const char* k : {"value", "warnings", "manifest"})
        if (r.has(k)) r.at(k);
    r.finish();
    return p;
}

namespace {

json summary_json(const Summary& s, double scale) {
    const double k = scale > 0.0 ? 1e4 / scale : 1.0;
    auto q = [&](std::size_t i) { return number_json(s.quantiles[i] * k); };
    return {{"count", s.count}, {"mean", number_json(s.mean * k)}, {"std", number_json(s.std * k)},
            {"q05", q(0)},      {"q25", q(1)},                     {"q50", q(2)},
            {"q75", q(3)},      {"q95", q(4)}};
}

}  // namespace

std::string distribution_json(const CostDistribution& d, double arrival_price, double total_shares,
                              const std::string& manifest) {
    json j;
    j["formulation"] = to_string(d.formulation);
    j["seed"] = d.seed;
    j["n_paths"] = d.n_paths;
    j["excluded_paths"] = d.excluded;
    j["summary"] = {{"shortfall", summary_json(d.shortfall_summary, 0.0)},
                    {"impact", summary_json(d.impact_summary, 0.0)},
                    {"timing", summary_json(d.timing_summary, 0.0)}};
    const double scale = arrival_price * total_shares;
    j["summary_bps"] = {{"shortfall", summary_json(d.shortfall_summary, scale)},
                        {"impact", summary_json(d.impact_summary, scale)},
                        {"timing", summary_json(d.timing_summary, scale)}};
    j["objective"] = {{"value", number_json(d.objective)}, {"standard_error", number_json(d.objective_se)}};
    json buckets = json::array();
    for (const auto& c : momentum_volatility_buckets(bucket_samples(d, arrival_price, total_shares))) {
        json b = summary_json(c.cost, 0.0);
        buckets.push_back({{"momentum", to_string(c.momentum)},
                           {"volatility", to_string(c.volatility)},
                           {"shortfall_bps", b}});
    }
    j["buckets"] = buckets;
    j["manifest"] = manifest;
    return j.dump(2) + "\n";
}

std::string attribution_json(const AttributionOutput& out, const std::string& manifest) {
    json j;
    json parts = json::array();
    for (std::size_t i = 0; i < out.participants.size(); ++i) {
        const auto& p = out.participants[i];
        json x;
        x["participant"] = p.participant;
        x["side"] = to_string(p.side);
        x["total_shares"] = p.total_shares;
        x["formulation"] = to_string(p.report.formulation);
        x["shortfall"] = p.report.shortfall;
        x["impact"] = p.report.impact;
        x["timing"] = p.report.timing;
        x["shortfall_bps"] = p.report.shortfall_bps;
        x["impact_bps"] = p.report.impact_bps;
        x["timing_bps"] = p.report.timing_bps;
        if (i < out.net_move_impact.size()) x["net_move_impact"] = out.net_move_impact[i];
        parts.push_back(x);
    }
    j["participants"] = parts;
    if (out.has_audit) {
        const auto& a = out.audit;
        j["zero_sum"] = {{"formulation", to_string(a.formulation)},
                         {"total_impact", a.total_impact},
                         {"total_timing", a.total_timing},
                         {"total", a.total_impact + a.total_timing},
                         {"scale", a.scale},
                         {"tolerance", a.tolerance},
                         {"pass", a.pass}};
    }
    j["manifest"] = manifest;
    return j.dump(2) + "\n";
}

std::string manifest_json(const RunManifest& m) {
    json j;
    j["command"] = m.command;
    j["config_digest"] = m.config_digest;
    j["seed"] = m.seed;
    j["library_version"] = m.library_version;
    j["started_utc"] = m.started_utc;
    j["finished_utc"] = m.finished_utc;
    j["inputs"] = m.inputs;
    j["outputs"] = m.outputs;
    return j.dump(2) + "\n";
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        fail(ErrorKind::config, "sha256 digest failed");
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
    return hex;
}

std::string utc_now() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::config, fmt::format("cannot read {}", path));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::config, fmt::format("cannot write {}", path));
    out << content;
    if (!out) fail(ErrorKind::config, fmt::format("write to {} failed", path));
}

}  // namespace optexec
