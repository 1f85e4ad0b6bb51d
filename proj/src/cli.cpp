#include "turnpike/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "turnpike/counterexample.hpp"
#include "turnpike/envelope.hpp"
#include "turnpike/error.hpp"
#include "turnpike/incentives.hpp"
#include "turnpike/solver.hpp"

namespace turnpike::cli {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(trim(cur));
    return out;
}

double to_double(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty() || !std::isfinite(v)) {
        fail(ErrorKind::parameter, key + ": not a finite number: '" + text + "'");
    }
    return v;
}

long long to_int(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
        fail(ErrorKind::parameter, key + ": not an integer: '" + text + "'");
    }
    return v;
}

std::uint64_t to_u64(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
        fail(ErrorKind::parameter, key + ": not a non-negative integer: '" + text + "'");
    }
    return v;
}

const std::vector<std::pair<Command, const char*>>& command_table() {
    static const std::vector<std::pair<Command, const char*>> t = {
        {Command::robustness, "robustness"}, {Command::counterexample, "counterexample"},
        {Command::incentives, "incentives"}, {Command::replicate, "replicate"},
        {Command::validate, "validate"},     {Command::price_square, "price-square"},
    };
    return t;
}

Command parse_command(const std::string& s) {
    for (const auto& [c, name] : command_table())
        if (s == name) return c;
    throw UsageError("unknown command '" + s + "'");
}

// keys accepted in config files and on the command line
const std::set<std::string>& known_keys() {
    static const std::set<std::string> k = {
        "command", "mu",     "sigma",  "r",       "utility", "p",    "pstar", "xhi",    "horizons",
        "method",  "nodes",  "x0",     "paths",   "seed",    "chunk", "alpha", "kbar",  "strikes",
        "kmin",    "kmax",   "spacing", "xmin",   "xmax",    "points", "s0",   "out",    "format",
    };
    return k;
}

// keys echoed into the output for each command
std::vector<std::string> echoed_keys(const ExperimentConfig& cfg) {
    std::vector<std::string> k = {"command", "format"};
    auto add = [&](std::initializer_list<const char*> more) { k.insert(k.end(), more.begin(), more.end()); };
    switch (cfg.command) {
        case Command::robustness:
            add({"mu", "sigma", "r", "utility", "p", "horizons", "method", "nodes", "x0"});
            if (cfg.method == Method::montecarlo) add({"paths", "seed", "chunk"});
            break;
        case Command::counterexample:
            add({"mu", "sigma", "r", "p", "pstar", "xhi", "horizons", "nodes", "x0"});
            break;
        case Command::incentives: add({"mu", "sigma", "r", "utility", "horizons", "nodes", "x0"}); break;
        case Command::replicate:
            add({"alpha", "kbar", "strikes", "kmin", "kmax", "spacing", "xmin", "xmax", "points"});
            break;
        case Command::validate: add({"utility", "p", "xmin", "xmax", "points"}); break;
        case Command::price_square: add({"s0", "sigma", "horizons"}); break;
    }
    std::sort(k.begin(), k.end());
    return k;
}

std::vector<double> parse_horizons(const std::string& text) {
    std::vector<double> hs;
    for (const auto& part : split(text, ',')) hs.push_back(to_double("horizons", part));
    if (hs.empty()) fail(ErrorKind::parameter, "horizons: empty list");
    return hs;
}

template <class F>
auto per_horizon(const std::vector<double>& hs, F f) {
    using R = decltype(f(0.0));
    std::vector<R> out(hs.size());
    std::vector<std::exception_ptr> errors(hs.size());
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < hs.size(); ++i) {
        pool.emplace_back([&, i] {
            try {
                out[i] = f(hs[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

double env_value(const ConcaveEnvelope& env, double x) { return x > 0.0 ? env.value(x) : env.value_at_zero(); }

Table run_robustness(const ExperimentConfig& cfg) {
    const UtilitySpec u = parse_utility(cfg.utility);
    const double p_ref = *cfg.p;
    const SolverOptions opts{cfg.nodes, cfg.x0};
    const bool mc = cfg.method == Method::montecarlo;
    Table t;
    t.columns = {"T", "ce_opt", "ce_iso", "ratio", "quad_err"};
    if (mc) t.columns.push_back("mc_stderr");
    const ConcaveEnvelope env = concave_envelope(u);
    auto rows = per_horizon(cfg.horizons, [&](double h) {
        CeRatioPoint pt = ce_ratio(u, cfg.market, p_ref, h, opts);
        std::vector<double> row;
        double stderr_ = 0.0;
        if (mc) {
            TerminalLaw law = cp_wealth_law(cfg.market, merton_weight(cfg.market, 1.0 - p_ref), h);
            law.log_mean += std::log(cfg.x0);
            const McEstimate est = mc_expect([&](double x) { return env_value(env, x); }, law, cfg.mc);
            pt.ce_isoelastic = certainty_equivalent(env, est.estimate);
            pt.ratio = pt.ce_isoelastic / pt.ce_optimal;
            stderr_ = est.std_error;
        }
        row = {h, pt.ce_optimal, pt.ce_isoelastic, pt.ratio, pt.quad_error};
        if (mc) row.push_back(stderr_);
        return row;
    });
    double worst = 0.0;
    for (const auto& r : rows) worst = std::max(worst, r[4]);
    t.rows = std::move(rows);
    t.meta.emplace_back("max_quad_error", num(worst));
    return t;
}

Table run_counterexample(const ExperimentConfig& cfg) {
    const double p = *cfg.p;
    const RestrictionReport rest = check_param_restriction(cfg.market, p, cfg.p_star);
    const SolverOptions opts{cfg.nodes, cfg.x0};
    InterpolationSpec interp;
    interp.x_hi = cfg.x_hi;
    Table t;
    t.columns = {"T", "ratio", "lowwealth_ratio_closed_form", "exponent", "eu_ratio", "quad_err"};
    t.rows = per_horizon(cfg.horizons, [&](double h) {
        const double hs[] = {h};
        const CollapsePoint c = ce_collapse_curve(cfg.market, p, cfg.p_star, interp, hs, opts).front();
        const DivergenceReport d = lowwealth_ratio_closed_form(cfg.market, p, cfg.p_star, h);
        return std::vector<double>{h, c.ce.ratio, d.lowwealth_ratio, d.exponent, c.eu_ratio, c.ce.quad_error};
    });
    t.meta.emplace_back("restriction_lhs", num(rest.lhs));
    t.meta.emplace_back("restriction_rhs", num(rest.rhs));
    t.meta.emplace_back("restriction_margin", num(rest.margin));
    t.meta.emplace_back("restriction_satisfied", rest.satisfied ? "true" : "false");
    return t;
}

Table run_incentives(const ExperimentConfig& cfg) {
    const UtilitySpec u = parse_utility(cfg.utility);
    const auto* inc = u.get_if<Incentivized>();
    if (!inc) fail(ErrorKind::parameter, "incentives: utility must be an incentive descriptor");
    const SolverOptions opts{cfg.nodes, cfg.x0};
    Table t;
    t.columns = {"T", "ce_plain", "ce_incentivized", "premium", "quad_err"};
    t.rows = per_horizon(cfg.horizons, [&](double h) {
        const double hs[] = {h};
        const GrantCurvePoint g = grant_value_curve(inc->p, inc->contract, cfg.market, hs, opts).front();
        return std::vector<double>{h, g.ce_plain, g.ce_incentivized, g.premium, g.quad_error};
    });
    const ConcaveEnvelope env = concave_envelope(u);
    t.meta.emplace_back("bridges", std::to_string(env.bridges().size()));
    for (std::size_t i = 0; i < env.bridges().size(); ++i) {
        const auto& b = env.bridges()[i];
        t.meta.emplace_back("bridge" + std::to_string(i), num(b.x_l) + " " + num(b.x_r) + " " + num(b.slope));
    }
    return t;
}

Table run_replicate(const ExperimentConfig& cfg) {
    const auto grid = strike_grid(cfg.kmin, cfg.kmax, cfg.strikes,
                                  cfg.geometric ? StrikeSpacing::geometric : StrikeSpacing::uniform);
    const ReplicationPortfolio pf = carr_madan_legs(cfg.alpha, cfg.kbar, grid);
    const auto xs = strike_grid(cfg.xmin, cfg.xmax, cfg.points, StrikeSpacing::geometric);
    const ReplicationResult res = replicate(pf, xs);
    Table t;
    t.columns = {"x", "target", "replicated", "rel_error"};
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double target = std::pow(xs[i], cfg.alpha);
        t.rows.push_back({xs[i], target, res.values[i], std::abs(res.values[i] - target) / std::abs(target)});
    }
    t.meta.emplace_back("max_rel_error", num(res.max_rel_error));
    t.meta.emplace_back("cash", num(pf.cash));
    t.meta.emplace_back("forward_qty", num(pf.forward_qty));
    t.meta.emplace_back("put_legs", std::to_string(pf.put_legs.size()));
    t.meta.emplace_back("call_legs", std::to_string(pf.call_legs.size()));
    return t;
}

Table run_validate(const ExperimentConfig& cfg) {
    const UtilitySpec u = parse_utility(cfg.utility);
    const AssumptionReport rep = validate_assumptions(u, *cfg.p);
    const ConcaveEnvelope env = concave_envelope(u);
    Table t;
    t.columns = {"x", "utility", "envelope"};
    for (int i = 0; i < cfg.points; ++i) {
        const double x = cfg.xmin + (cfg.xmax - cfg.xmin) * i / (cfg.points - 1);
        t.rows.push_back({x, evaluate(u, x), env.value(x)});
    }
    auto flag = [](bool b) { return b ? "true" : "false"; };
    t.meta.emplace_back("high_wealth_converges", flag(rep.high_wealth_converges));
    t.meta.emplace_back("low_wealth_bounded", flag(rep.low_wealth_bounded));
    if (rep.analytic_low_wealth) t.meta.emplace_back("analytic_low_wealth", flag(*rep.analytic_low_wealth));
    for (const auto& [x, r] : rep.high_wealth) t.meta.emplace_back("high_wealth_ratio@" + num(x), num(r));
    for (const auto& [x, r] : rep.low_wealth) t.meta.emplace_back("low_wealth_ratio@" + num(x), num(r));
    t.meta.emplace_back("bridges", std::to_string(env.bridges().size()));
    for (std::size_t i = 0; i < env.bridges().size(); ++i) {
        const auto& b = env.bridges()[i];
        t.meta.emplace_back("bridge" + std::to_string(i), num(b.x_l) + " " + num(b.x_r) + " " + num(b.slope));
    }
    return t;
}

Table run_price_square(const ExperimentConfig& cfg) {
    Table t;
    t.columns = {"T", "price"};
    for (double h : cfg.horizons) t.rows.push_back({h, square_contract_price(cfg.s0, cfg.market.sigma, h)});
    return t;
}

}  // namespace

const char* command_name(Command c) {
    for (const auto& [cc, name] : command_table())
        if (cc == c) return name;
    return "?";
}

UtilitySpec parse_utility(const std::string& descriptor) {
    const std::string d = trim(descriptor);
    const auto colon = d.find(':');
    const std::string kind = d.substr(0, colon);
    KeyValues f;
    if (colon != std::string::npos) {
        for (const auto& item : split(d.substr(colon + 1), ',')) {
            const auto eq = item.find('=');
            if (eq == std::string::npos) fail(ErrorKind::parameter, "utility: expected key=value, got '" + item + "'");
            f[trim(item.substr(0, eq))] = trim(item.substr(eq + 1));
        }
    }
    auto take = [&](const char* key, std::optional<double> def = std::nullopt) {
        const auto it = f.find(key);
        if (it == f.end()) {
            if (!def) fail(ErrorKind::parameter, "utility '" + kind + "': missing field " + key);
            return *def;
        }
        const double v = to_double(std::string("utility.") + key, it->second);
        f.erase(it);
        return v;
    };
    auto done = [&](UtilitySpec u) {
        if (!f.empty()) fail(ErrorKind::parameter, "utility '" + kind + "': unknown field " + f.begin()->first);
        return u;
    };

    if (kind == "isoelastic") return done(UtilitySpec::isoelastic(take("p")));
    if (kind == "log") return done(UtilitySpec::logarithmic());
    if (kind == "shifted") {
        const double p = take("p");
        return done(UtilitySpec::shifted_power(p, take("a")));
    }
    if (kind == "twopiece") {
        const double p = take("p");
        const double ps = take("pstar");
        InterpolationSpec interp;
        interp.x_hi = take("xhi", 4.0);
        return done(UtilitySpec::two_piece_power(p, ps, interp));
    }
    if (kind == "power") {
        const double p = take("p");
        return done(UtilitySpec::power_incentive(p, take("alpha")));
    }
    if (kind == "incentive") {
        Contract c;
        const double p = take("p");
        c.cash = take("c1", 0.0);
        c.stock = take("c2", 1.0);
        if (auto it = f.find("legs"); it != f.end()) {
            for (const auto& leg : split(it->second, ';')) {
                const auto at = leg.find('@');
                if (at == std::string::npos) fail(ErrorKind::parameter, "utility: leg must be quantity@strike");
                c.legs.push_back({to_double("legs", leg.substr(0, at)), to_double("legs", leg.substr(at + 1))});
            }
            f.erase(it);
        }
        return done(UtilitySpec::incentivized(p, c));
    }
    fail(ErrorKind::parameter, "utility: unknown kind '" + kind + "'");
}

ExperimentConfig config_from_map(const KeyValues& kv) {
    for (const auto& [k, v] : kv) {
        if (!known_keys().count(k)) fail(ErrorKind::parameter, "unknown config key '" + k + "'");
    }
    auto get = [&](const char* key) -> std::optional<std::string> {
        const auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        return it->second;
    };
    ExperimentConfig cfg;
    const auto cmd = get("command");
    if (!cmd) throw UsageError("no command given");
    cfg.command = parse_command(trim(*cmd));

    if (auto v = get("mu")) cfg.market.mu = to_double("mu", *v);
    if (auto v = get("sigma")) cfg.market.sigma = to_double("sigma", *v);
    if (auto v = get("r")) cfg.market.r = to_double("r", *v);
    if (auto v = get("p")) cfg.p = to_double("p", *v);
    if (auto v = get("pstar")) cfg.p_star = to_double("pstar", *v);
    if (auto v = get("xhi")) cfg.x_hi = to_double("xhi", *v);
    if (auto v = get("nodes")) cfg.nodes = static_cast<int>(to_int("nodes", *v));
    if (auto v = get("x0")) cfg.x0 = to_double("x0", *v);
    if (auto v = get("paths")) cfg.mc.n_paths = to_u64("paths", *v);
    if (auto v = get("seed")) cfg.mc.seed = to_u64("seed", *v);
    if (auto v = get("chunk")) cfg.mc.chunk_size = to_u64("chunk", *v);
    if (auto v = get("alpha")) cfg.alpha = to_double("alpha", *v);
    if (auto v = get("kbar")) cfg.kbar = to_double("kbar", *v);
    if (auto v = get("strikes")) cfg.strikes = static_cast<int>(to_int("strikes", *v));
    if (auto v = get("kmin")) cfg.kmin = to_double("kmin", *v);
    if (auto v = get("kmax")) cfg.kmax = to_double("kmax", *v);
    if (auto v = get("s0")) cfg.s0 = to_double("s0", *v);
    if (auto v = get("out")) cfg.out = trim(*v);
    if (auto v = get("spacing")) {
        if (*v == "geometric") cfg.geometric = true;
        else if (*v == "uniform") cfg.geometric = false;
        else fail(ErrorKind::parameter, "spacing must be geometric or uniform");
    }
    if (auto v = get("method")) {
        if (*v == "quadrature") cfg.method = Method::quadrature;
        else if (*v == "montecarlo") cfg.method = Method::montecarlo;
        else fail(ErrorKind::parameter, "method must be quadrature or montecarlo");
    }
    if (auto v = get("format")) {
        if (*v == "csv") cfg.format = Format::csv;
        else if (*v == "json") cfg.format = Format::json;
        else fail(ErrorKind::parameter, "format must be csv or json");
    }

    // per-command defaults
    std::string utility, horizons;
    switch (cfg.command) {
        case Command::robustness:
            utility = "shifted:p=-1,a=1";
            horizons = "5,20,50";
            break;
        case Command::counterexample:
            horizons = "10,25,50,100";
            if (!cfg.p) cfg.p = -1.0;
            break;
        case Command::incentives:
            utility = "incentive:p=0.5,c1=1,c2=2,legs=3@4";
            horizons = "5,10,20,40";
            break;
        case Command::validate:
            utility = "twopiece:p=-1,pstar=-3,xhi=4";
            cfg.xmin = 0.1;
            cfg.xmax = 10.0;
            break;
        case Command::price_square: horizons = "1"; break;
        case Command::replicate: break;
    }
    cfg.utility = get("utility").value_or(utility);
    if (auto v = get("horizons")) horizons = *v;
    if (!horizons.empty()) cfg.horizons = parse_horizons(horizons);
    if (auto v = get("xmin")) cfg.xmin = to_double("xmin", *v);
    if (auto v = get("xmax")) cfg.xmax = to_double("xmax", *v);
    if (auto v = get("points")) cfg.points = static_cast<int>(to_int("points", *v));

    // validation
    cfg.market.validate();
    for (std::size_t i = 0; i < cfg.horizons.size(); ++i) {
        const bool ok_zero = cfg.command == Command::price_square && cfg.horizons[i] == 0.0;
        if (!(cfg.horizons[i] > 0.0) && !ok_zero) fail(ErrorKind::parameter, "horizons must be > 0");
        if (i > 0 && !(cfg.horizons[i] > cfg.horizons[i - 1]))
            fail(ErrorKind::parameter, "horizons must be strictly increasing");
    }
    if (cfg.nodes < 21) fail(ErrorKind::parameter, "nodes must be >= 21");
    if (!(cfg.x0 > 0.0)) fail(ErrorKind::parameter, "x0 must be > 0");
    if (cfg.mc.n_paths < 2) fail(ErrorKind::parameter, "paths must be >= 2");
    if (cfg.mc.chunk_size < 1) fail(ErrorKind::parameter, "chunk must be >= 1");
    if (cfg.method == Method::montecarlo && cfg.command != Command::robustness)
        fail(ErrorKind::parameter, "method=montecarlo is only available for robustness");
    if (cfg.strikes < 1) fail(ErrorKind::parameter, "strikes must be >= 1");
    if (cfg.points < 2) fail(ErrorKind::parameter, "points must be >= 2");
    if (!(cfg.xmin > 0.0) || !(cfg.xmax > cfg.xmin)) fail(ErrorKind::parameter, "need 0 < xmin < xmax");
    if (!(cfg.kmin > 0.0) || !(cfg.kmax > cfg.kmin)) fail(ErrorKind::parameter, "need 0 < kmin < kmax");

    if (cfg.command == Command::robustness || cfg.command == Command::validate ||
        cfg.command == Command::incentives) {
        const UtilitySpec u = parse_utility(cfg.utility);
        cfg.utility = u.describe();
        if (!cfg.p) cfg.p = reference_power(u);
    }
    return cfg;
}

KeyValues config_to_map(const ExperimentConfig& cfg) {
    KeyValues all;
    all["command"] = command_name(cfg.command);
    all["format"] = cfg.format == Format::csv ? "csv" : "json";
    all["mu"] = num(cfg.market.mu);
    all["sigma"] = num(cfg.market.sigma);
    all["r"] = num(cfg.market.r);
    all["utility"] = cfg.utility;
    if (cfg.p) all["p"] = num(*cfg.p);
    all["pstar"] = num(cfg.p_star);
    all["xhi"] = num(cfg.x_hi);
    std::string hs;
    for (std::size_t i = 0; i < cfg.horizons.size(); ++i) hs += (i ? "," : "") + num(cfg.horizons[i]);
    all["horizons"] = hs;
    all["method"] = cfg.method == Method::quadrature ? "quadrature" : "montecarlo";
    all["nodes"] = std::to_string(cfg.nodes);
    all["x0"] = num(cfg.x0);
    all["paths"] = std::to_string(cfg.mc.n_paths);
    all["seed"] = std::to_string(cfg.mc.seed);
    all["chunk"] = std::to_string(cfg.mc.chunk_size);
    all["alpha"] = num(cfg.alpha);
    all["kbar"] = num(cfg.kbar);
    all["strikes"] = std::to_string(cfg.strikes);
    all["kmin"] = num(cfg.kmin);
    all["kmax"] = num(cfg.kmax);
    all["spacing"] = cfg.geometric ? "geometric" : "uniform";
    all["xmin"] = num(cfg.xmin);
    all["xmax"] = num(cfg.xmax);
    all["points"] = std::to_string(cfg.points);
    all["s0"] = num(cfg.s0);

    KeyValues out;
    for (const auto& k : echoed_keys(cfg)) {
        if (auto it = all.find(k); it != all.end()) out[k] = it->second;
    }
    return out;
}

KeyValues read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    KeyValues kv;
    if (trim(text).starts_with("{")) {
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorKind::parameter, "config file '" + path + "': " + e.what());
        }
        if (!doc.contains("config") || !doc["config"].is_object())
            fail(ErrorKind::parameter, "config file '" + path + "': no \"config\" object");
        for (const auto& [k, v] : doc["config"].items()) kv[k] = v.is_string() ? v.get<std::string>() : v.dump();
        return kv;
    }
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        std::string s = trim(line);
        if (s.starts_with("#")) s = trim(s.substr(1));
        const auto eq = s.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = trim(s.substr(0, eq));
        if (key.starts_with("meta.") || key == "tool") continue;
        kv[key] = trim(s.substr(eq + 1));
    }
    return kv;
}

Table run_experiment(const ExperimentConfig& cfg) {
    switch (cfg.command) {
        case Command::robustness: return run_robustness(cfg);
        case Command::counterexample: return run_counterexample(cfg);
        case Command::incentives: return run_incentives(cfg);
        case Command::replicate: return run_replicate(cfg);
        case Command::validate: return run_validate(cfg);
        case Command::price_square: return run_price_square(cfg);
    }
    return {};
}

std::string render(const ExperimentConfig& cfg, const Table& table) {
    const KeyValues conf = config_to_map(cfg);
    if (cfg.format == Format::csv) {
        std::string s = "# tool=" + std::string(kToolVersion) + "\n";
        for (const auto& [k, v] : conf) s += "# " + k + "=" + v + "\n";
        for (const auto& [k, v] : table.meta) s += "# meta." + k + "=" + v + "\n";
        for (std::size_t i = 0; i < table.columns.size(); ++i) s += (i ? "," : "") + table.columns[i];
        s += "\n";
        for (const auto& row : table.rows) {
            for (std::size_t i = 0; i < row.size(); ++i) s += (i ? "," : "") + num(row[i]);
            s += "\n";
        }
        return s;
    }
    nlohmann::ordered_json doc;
    doc["tool"] = kToolVersion;
    doc["config"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : conf) doc["config"][k] = v;
    doc["meta"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : table.meta) {
        if (v == "true" || v == "false") {
            doc["meta"][k] = v == "true";
            continue;
        }
        long long i = 0;
        const auto [iptr, iec] = std::from_chars(v.data(), v.data() + v.size(), i);
        if (iec == std::errc() && iptr == v.data() + v.size()) {
            doc["meta"][k] = i;
            continue;
        }
        double d = 0.0;
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), d);
        if (ec == std::errc() && ptr == v.data() + v.size()) doc["meta"][k] = d;
        else doc["meta"][k] = v;
    }
    doc["columns"] = table.columns;
    doc["rows"] = table.rows;
    return doc.dump(2) + "\n";
}

int main_entry(int argc, const char* const* argv) {
    CLI::App app{"Long-horizon portfolio robustness experiments"};
    app.set_version_flag("--version", kToolVersion);
    std::string command, config_path;
    app.add_option("command", command,
                   "robustness | counterexample | incentives | replicate | validate | price-square");
    app.add_option("--config", config_path, "key=value file (or a previous output file)");

    struct FlagHelp {
        const char* key;
        const char* help;
    };
    static const FlagHelp flags[] = {
        {"mu", "excess drift"},
        {"sigma", "volatility"},
        {"r", "safe rate"},
        {"p", "reference power (two-piece p for counterexample)"},
        {"pstar", "low-wealth power of the two-piece utility"},
        {"xhi", "upper interpolation knot of the two-piece utility"},
        {"utility", "descriptor, e.g. shifted:p=-1,a=1"},
        {"horizons", "comma-separated, strictly increasing"},
        {"method", "quadrature | montecarlo"},
        {"nodes", "quadrature nodes (>= 21)"},
        {"x0", "initial capital"},
        {"paths", "Monte Carlo paths"},
        {"seed", "Monte Carlo seed"},
        {"chunk", "Monte Carlo chunk size"},
        {"alpha", "power of the replicated payoff"},
        {"kbar", "replication anchor strike"},
        {"strikes", "number of strikes"},
        {"kmin", "smallest strike"},
        {"kmax", "largest strike"},
        {"spacing", "geometric | uniform"},
        {"xmin", "smallest evaluation point"},
        {"xmax", "largest evaluation point"},
        {"points", "number of evaluation points"},
        {"s0", "initial stock price"},
        {"out", "output path, '-' for stdout"},
        {"format", "csv | json"},
    };
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> opts;
    for (const auto& f : flags) opts[f.key] = app.add_option(std::string("--") + f.key, values[f.key], f.help);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        KeyValues kv;
        if (!config_path.empty()) kv = read_config_file(config_path);
        for (const auto& [k, opt] : opts)
            if (opt->count() > 0) kv[k] = values[k];
        if (!command.empty()) kv["command"] = command;

        const ExperimentConfig cfg = config_from_map(kv);
        const std::string text = render(cfg, run_experiment(cfg));
        if (cfg.out == "-") {
            std::cout << text;
            std::cout.flush();
            if (!std::cout) throw IoError("cannot write to stdout");
        } else {
            std::ofstream out(cfg.out, std::ios::binary | std::ios::trunc);
            if (!out) throw IoError("cannot open output file '" + cfg.out + "'");
            out << text;
            out.close();
            if (!out) throw IoError("cannot write output file '" + cfg.out + "'");
        }
        return kOk;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n" << app.help();
        return kUsage;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kIo;
    } catch (const Error& e) {
        std::cerr << (e.is_validation() ? "invalid configuration: " : "numerical failure: ") << e.what() << "\n";
        return e.is_validation() ? kValidation : kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumerical;
    }
}

}  // namespace turnpike::cli
