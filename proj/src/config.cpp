#include "dynbc/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace dynbc {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

bool valid_name(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.')) return false;
    return true;
}

std::string where(int line) { return " (line " + std::to_string(line) + ")"; }

}  // namespace

RawConfig parse_config_text(const std::string& text) {
    RawConfig raw;
    std::vector<std::string> stack;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    auto prefix = [&] {
        std::string p;
        for (const auto& s : stack) p += s + ".";
        return p;
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::string rest = trim(line);
        // a line may hold `name {`, `}`, `key = value`, or `name { key = value }`
        while (!rest.empty()) {
            if (rest[0] == '}') {
                if (stack.empty()) throw ConfigError("unbalanced '}'" + where(lineno));
                stack.pop_back();
                rest = trim(rest.substr(1));
                continue;
            }
            const auto brace = rest.find('{');
            const auto eq = rest.find('=');
            if (brace != std::string::npos && (eq == std::string::npos || brace < eq)) {
                const std::string name = trim(rest.substr(0, brace));
                if (!valid_name(name)) throw ConfigError("bad block name '" + name + "'" + where(lineno));
                stack.push_back(name);
                rest = trim(rest.substr(brace + 1));
                continue;
            }
            if (eq == std::string::npos) throw ConfigError("expected 'key = value', got '" + rest + "'" + where(lineno));
            const std::string key = trim(rest.substr(0, eq));
            if (!valid_name(key)) throw ConfigError("bad key '" + key + "'" + where(lineno));
            std::string value = trim(rest.substr(eq + 1));
            // a closing brace may follow the value on the same line
            std::string tail;
            if (auto close = value.find('}'); close != std::string::npos) {
                tail = value.substr(close);
                value = trim(value.substr(0, close));
            }
            const std::string full = prefix() + key;
            if (raw.entries.count(full)) throw ConfigError("duplicate key '" + full + "'" + where(lineno));
            raw.entries[full] = {value, lineno};
            rest = trim(tail);
        }
    }
    if (!stack.empty()) throw ConfigError("unclosed block '" + stack.back() + "'");
    return raw;
}

RawConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

namespace {

double to_double(const std::string& key, const RawConfig::Entry& e) {
    const std::string v = trim(e.value);
    double out = 0.0;
    const auto* end = v.data() + v.size();
    auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end) throw ConfigError(key + ": expected a number, got '" + v + "'" + where(e.line));
    return out;
}

std::vector<double> to_list(const std::string& key, const RawConfig::Entry& e) {
    std::string v = trim(e.value);
    if (!v.empty() && (v.front() == '[' || v.front() == '(')) {
        const char close = v.front() == '[' ? ']' : ')';
        if (v.back() != close) throw ConfigError(key + ": unterminated list" + where(e.line));
        v = v.substr(1, v.size() - 2);
    }
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ConfigError(key + ": empty list item" + where(e.line));
        out.push_back(to_double(key, {item, e.line}));
    }
    if (out.empty()) throw ConfigError(key + ": empty list" + where(e.line));
    return out;
}

Point to_point(const std::string& key, const RawConfig::Entry& e) {
    const auto v = to_list(key, e);
    if (v.size() == 1) return {v[0], 0.0};
    if (v.size() == 2) return {v[0], v[1]};
    throw ConfigError(key + ": expected one or two coordinates" + where(e.line));
}

long long to_int(const std::string& key, const RawConfig::Entry& e, long long lo) {
    const double d = to_double(key, e);
    if (d != std::floor(d) || d < static_cast<double>(lo))
        throw ConfigError(key + ": expected an integer >= " + std::to_string(lo) + where(e.line));
    return static_cast<long long>(d);
}

std::string to_choice(const std::string& key, const RawConfig::Entry& e, std::initializer_list<const char*> allowed) {
    const std::string v = trim(e.value);
    for (const char* a : allowed)
        if (v == a) return v;
    std::string msg = key + ": expected one of";
    for (const char* a : allowed) msg += std::string(" ") + a;
    throw ConfigError(msg + ", got '" + v + "'" + where(e.line));
}

}  // namespace

RunConfig config_from_raw(const RawConfig& raw) {
    RunConfig c;
    using Handler = std::function<void(const std::string&, const RawConfig::Entry&)>;
    const std::map<std::string, Handler> handlers = {
        {"domain.kind",
         [&](auto& k, auto& e) {
             c.kind = to_choice(k, e, {"interval", "disk"}) == "disk" ? DomainKind::disk : DomainKind::interval;
         }},
        {"domain.a", [&](auto& k, auto& e) { c.a = to_double(k, e); }},
        {"domain.b", [&](auto& k, auto& e) { c.b = to_double(k, e); }},
        {"domain.center", [&](auto& k, auto& e) { c.center = to_point(k, e); }},
        {"domain.radius", [&](auto& k, auto& e) { c.radius = to_double(k, e); }},
        {"domain.x0", [&](auto& k, auto& e) { c.x0 = to_point(k, e); }},
        {"omega.lo", [&](auto& k, auto& e) { c.omega.lo = to_double(k, e); }},
        {"omega.hi", [&](auto& k, auto& e) { c.omega.hi = to_double(k, e); }},
        {"omega.center", [&](auto& k, auto& e) { c.omega.center = to_point(k, e); }},
        {"omega.radius", [&](auto& k, auto& e) { c.omega.radius = to_double(k, e); }},
        {"grid.n", [&](auto& k, auto& e) { c.grid.n = static_cast<int>(to_int(k, e, 2)); }},
        {"grid.nr", [&](auto& k, auto& e) { c.grid.nr = static_cast<int>(to_int(k, e, 2)); }},
        {"grid.ntheta", [&](auto& k, auto& e) { c.grid.ntheta = static_cast<int>(to_int(k, e, 3)); }},
        {"weight.s", [&](auto& k, auto& e) { c.s = to_double(k, e); }},
        {"weight.h", [&](auto& k, auto& e) { c.h_weight = to_double(k, e); }},
        {"weight.ell", [&](auto& k, auto& e) { c.ell = to_double(k, e); }},
        {"time.T", [&](auto& k, auto& e) { c.T = to_double(k, e); }},
        {"time.dt", [&](auto& k, auto& e) { c.dt = to_double(k, e); }},
        {"time.scheme",
         [&](auto& k, auto& e) {
             c.scheme = parse_scheme(to_choice(k, e, {"crank_nicolson", "backward_euler", "cn", "be"}));
         }},
        {"impulse.tau", [&](auto& k, auto& e) { c.tau = to_double(k, e); }},
        {"control.eps", [&](auto& k, auto& e) { c.eps = to_list(k, e); }},
        {"control.kappa",
         [&](auto& k, auto& e) {
             if (trim(e.value) == "auto")
                 c.kappa.reset();
             else
                 c.kappa = to_double(k, e);
         }},
        {"control.kappa_seed", [&](auto& k, auto& e) { c.kappa_seed = to_choice(k, e, {"unit", "fitted"}); }},
        {"control.cg_tol", [&](auto& k, auto& e) { c.cg_tol = to_double(k, e); }},
        {"control.cg_maxit", [&](auto& k, auto& e) { c.cg_maxit = static_cast<std::size_t>(to_int(k, e, 1)); }},
        {"control.max_doublings", [&](auto& k, auto& e) { c.max_doublings = static_cast<int>(to_int(k, e, 0)); }},
        {"control.members", [&](auto& k, auto& e) { c.members = static_cast<std::size_t>(to_int(k, e, 1)); }},
        {"control.psi0", [&](auto& k, auto& e) { c.psi0 = to_choice(k, e, {"random", "zero"}); }},
        {"control.duality_samples",
         [&](auto& k, auto& e) { c.duality_samples = static_cast<std::size_t>(to_int(k, e, 0)); }},
        {"ensemble.count", [&](auto& k, auto& e) { c.ensemble_count = static_cast<std::size_t>(to_int(k, e, 0)); }},
        {"ensemble.holdout", [&](auto& k, auto& e) { c.ensemble_holdout = static_cast<std::size_t>(to_int(k, e, 0)); }},
        {"ensemble.seed", [&](auto& k, auto& e) { c.seed = static_cast<std::uint64_t>(to_int(k, e, 0)); }},
        {"ensemble.initial",
         [&](auto& k, auto& e) { c.ensemble_initial = to_choice(k, e, {"white", "smooth", "zero"}); }},
        {"trace.train", [&](auto& k, auto& e) { c.trace_train = static_cast<std::size_t>(to_int(k, e, 1)); }},
        {"trace.holdout", [&](auto& k, auto& e) { c.trace_holdout = static_cast<std::size_t>(to_int(k, e, 0)); }},
        {"trace.triples", [&](auto& k, auto& e) { c.trace_triples = static_cast<std::size_t>(to_int(k, e, 0)); }},
        {"trace.initial", [&](auto& k, auto& e) { c.trace_initial = to_choice(k, e, {"white", "smooth", "zero"}); }},
        {"trace.modes", [&](auto& k, auto& e) { c.trace_modes = static_cast<int>(to_int(k, e, 1)); }},
        {"commutator.t", [&](auto& k, auto& e) { c.commutator_t = to_double(k, e); }},
        {"commutator.levels", [&](auto& k, auto& e) { c.commutator_levels = static_cast<int>(to_int(k, e, 2)); }},
        {"simulate.initial",
         [&](auto& k, auto& e) { c.simulate_initial = to_choice(k, e, {"white", "smooth", "constant", "zero"}); }},
        {"output.dir", [&](auto&, auto& e) { c.output_dir = trim(e.value); }},
    };
    // kind first, since defaults depend on it
    if (auto it = raw.entries.find("domain.kind"); it != raw.entries.end()) handlers.at("domain.kind")(it->first, it->second);
    if (c.kind == DomainKind::disk) {
        c.grid = {0, 8, 16};
        c.omega = {0.0, 0.0, {0.0, 0.0}, 0.5};
    }
    for (const auto& [key, entry] : raw.entries) {
        auto h = handlers.find(key);
        if (h == handlers.end()) throw ConfigError("unknown config key '" + key + "'" + where(entry.line));
        h->second(key, entry);
    }
    c.validate();
    return c;
}

DomainSpec RunConfig::domain() const {
    if (kind == DomainKind::interval) return DomainSpec::interval(a, b, x0 ? x0->x : 0.5 * (a + b), omega);
    return DomainSpec::disk(center, radius, x0 ? *x0 : center, omega);
}

void RunConfig::validate() const {
    try {
        (void)domain();
        WeightParams{s, h_weight, T}.validate();
        schedule().validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (kind == DomainKind::interval && grid.n < 2) throw ConfigError("grid.n must be at least 2");
    if (kind == DomainKind::disk && (grid.nr < 2 || grid.ntheta < 3))
        throw ConfigError("grid.nr must be at least 2 and grid.ntheta at least 3");
    if (!(tau > 0.0 && tau < T)) throw ConfigError("impulse.tau must lie in (0, time.T)");
    for (double e : eps)
        if (!(e > 0.0)) throw ConfigError("control.eps values must be positive");
    if (kappa && !(*kappa > 0.0)) throw ConfigError("control.kappa must be positive or auto");
    if (!(cg_tol > 0.0 && cg_tol < 1.0)) throw ConfigError("control.cg_tol must lie in (0, 1)");
    if (!(ell > 1.0)) throw ConfigError("weight.ell must exceed 1");
    if (!(commutator_t >= 0.0 && commutator_t <= T)) throw ConfigError("commutator.t must lie in [0, time.T]");
}

RunConfig load_config(const std::string& path) { return config_from_raw(parse_config_file(path)); }

}  // namespace dynbc
