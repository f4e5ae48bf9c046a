#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dynbc/discretize.hpp"
#include "dynbc/evolve.hpp"
#include "dynbc/geometry.hpp"

namespace dynbc {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Raw key-value pairs: blocks `name { ... }` nest and flatten to dotted keys.
struct RawConfig {
    struct Entry {
        std::string value;
        int line = 0;
    };
    std::map<std::string, Entry> entries;
};

RawConfig parse_config_text(const std::string& text);
RawConfig parse_config_file(const std::string& path);

struct RunConfig {
    // domain
    DomainKind kind = DomainKind::interval;
    double a = 0.0, b = 1.0;
    Point center{};
    double radius = 1.0;
    std::optional<Point> x0;
    ObservationRegion omega{0.3, 0.7, {}, 0.0};

    Resolution grid{32, 0, 0};

    double s = 0.5;
    double h_weight = 0.5;
    double ell = 4.0;

    double T = 1.0;
    double dt = 1e-2;
    Scheme scheme = Scheme::crank_nicolson;

    double tau = 0.5;

    std::vector<double> eps{0.1};
    std::optional<double> kappa;       // empty: calibrate
    std::string kappa_seed = "unit";   // unit | fitted
    double cg_tol = 1e-12;
    std::size_t cg_maxit = 2000;
    int max_doublings = 40;
    std::size_t members = 5;
    std::string psi0 = "random";       // random | zero
    std::size_t duality_samples = 20;

    std::size_t ensemble_count = 20;
    std::size_t ensemble_holdout = 10;
    std::uint64_t seed = 1;
    std::string ensemble_initial = "white";

    std::size_t trace_train = 10;
    std::size_t trace_holdout = 50;
    std::size_t trace_triples = 10;
    std::string trace_initial = "smooth";
    int trace_modes = 6;

    double commutator_t = 0.3;
    int commutator_levels = 4;

    std::string simulate_initial = "smooth";

    std::string output_dir = "out";

    DomainSpec domain() const;
    WeightParams weight() const { return {s, h_weight, T}; }
    Schedule schedule() const { return {0.0, T, dt, scheme}; }
    void validate() const;
};

RunConfig config_from_raw(const RawConfig& raw);
RunConfig load_config(const std::string& path);

}  // namespace dynbc
