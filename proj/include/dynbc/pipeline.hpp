#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "dynbc/config.hpp"
#include "dynbc/discretize.hpp"
#include "dynbc/report.hpp"

namespace dynbc {

// Independent stream per purpose, all derived from one seed.
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream);

// Unit mass-norm states.
State random_white_state(const OperatorSet& ops, std::mt19937_64& rng);
State random_smooth_state(const Discretization& disc, const DomainSpec& domain, int modes, std::mt19937_64& rng);
// kind: white | smooth | constant | zero
State initial_state(const std::string& kind, const Discretization& disc, const DomainSpec& domain, int modes,
                    std::mt19937_64& rng);

// Each run writes its artifacts into `out` and returns the JSON summary it
// wrote; the "passed" member carries the certification outcome.
Json run_simulate(const RunConfig& cfg, const std::filesystem::path& out);
Json run_observe(const RunConfig& cfg, const std::filesystem::path& out);
Json run_commutator(const RunConfig& cfg, const std::filesystem::path& out);
Json run_control(const RunConfig& cfg, const std::filesystem::path& out);
Json run_cost_study(const RunConfig& cfg, const std::filesystem::path& out);
// Writes report.json into `dir`.
Json run_report(const std::filesystem::path& dir);

}  // namespace dynbc
