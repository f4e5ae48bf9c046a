#include "dynbc/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>

#include "dynbc/control.hpp"
#include "dynbc/evolve.hpp"
#include "dynbc/logconvexity.hpp"

namespace dynbc {

namespace fs = std::filesystem;

namespace {

// Runs f(0..n-1) across threads; results must be stored by index. The
// exception of the lowest failing index is rethrown.
template <class F>
void parallel_for(std::size_t n, F&& f) {
    std::vector<std::exception_ptr> errors(n);
    const auto count = static_cast<std::ptrdiff_t>(n);
#if defined(DYNBC_HAVE_OPENMP)
#pragma omp parallel for schedule(dynamic)
#endif
    for (std::ptrdiff_t i = 0; i < count; ++i) {
        try {
            f(static_cast<std::size_t>(i));
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

State normalized(State u, const OperatorSet& ops) {
    const double n = norm(u, ops);
    if (n > 0.0)
        for (double& x : u) x /= n;
    return u;
}

Json resolution_json(const RunConfig& cfg) {
    if (cfg.kind == DomainKind::interval) return {{"n", cfg.grid.n}};
    return {{"nr", cfg.grid.nr}, {"ntheta", cfg.grid.ntheta}};
}

Json setup_json(const RunConfig& cfg, const DomainSpec& domain, const Discretization& disc) {
    return {{"domain", domain.describe()},
            {"grid", resolution_json(cfg)},
            {"dofs", disc.grid.size()},
            {"s", cfg.s},
            {"h_weight", cfg.h_weight},
            {"T", cfg.T},
            {"dt", cfg.dt},
            {"scheme", scheme_name(cfg.scheme)},
            {"seed", cfg.seed}};
}

std::string cell(bool b) { return b ? "true" : "false"; }
std::string cell(double x) { return format_double(x); }
std::string cell(std::size_t x) { return std::to_string(x); }

void write_json(const fs::path& path, const Json& j) { write_text(path, dump_json(j)); }

std::optional<CostConstants> read_fitted_constants(const fs::path& dir) {
    const fs::path path = dir / "constants.json";
    if (!fs::exists(path)) return std::nullopt;
    const Json j = read_json(path);
    for (const char* key : {"M1", "M2", "delta"})
        if (!j.contains(key) || !j[key].is_number()) return std::nullopt;
    return CostConstants{j["M1"].get<double>(), j["M2"].get<double>(), j["delta"].get<double>()};
}

std::vector<State> white_states(std::size_t count, const OperatorSet& ops, std::mt19937_64& rng) {
    std::vector<State> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(random_white_state(ops, rng));
    return out;
}

}  // namespace

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    return std::mt19937_64(seq);
}

State random_white_state(const OperatorSet& ops, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    State u(ops.size());
    for (double& x : u) x = g(rng);
    return normalized(std::move(u), ops);
}

State random_smooth_state(const Discretization& disc, const DomainSpec& domain, int modes, std::mt19937_64& rng) {
    if (modes < 1) throw std::invalid_argument("smooth states need at least one mode");
    std::normal_distribution<double> g;
    const double pi = std::numbers::pi;
    State u(disc.grid.size(), 0.0);
    if (domain.kind() == DomainKind::interval) {
        const double len = domain.b() - domain.a();
        for (int k = 0; k < modes; ++k) {
            const double c = g(rng) / (1.0 + k);
            for (std::size_t i = 0; i < u.size(); ++i)
                u[i] += c * std::cos(k * pi * (disc.grid.nodes[i].x - domain.a()) / len);
        }
    } else {
        const double r = domain.radius();
        const Point lo{domain.center().x - r, domain.center().y - r};
        for (int k = 0; k < modes; ++k)
            for (int l = 0; k + l < modes; ++l) {
                const double c = g(rng) / (1.0 + k + l);
                for (std::size_t i = 0; i < u.size(); ++i) {
                    const Point p = disc.grid.nodes[i] - lo;
                    u[i] += c * std::cos(k * pi * p.x / (2 * r)) * std::cos(l * pi * p.y / (2 * r));
                }
            }
    }
    // a short heat flow removes the stiff components that the sampled
    // cosines carry at the dynamic boundary
    const double len = domain.kind() == DomainKind::interval ? domain.b() - domain.a() : domain.radius();
    const Propagator smoother(disc.ops, 1e-3 * len * len, Scheme::backward_euler);
    for (int k = 0; k < 10; ++k) smoother.step(u);
    return normalized(std::move(u), disc.ops);
}

State initial_state(const std::string& kind, const Discretization& disc, const DomainSpec& domain, int modes,
                    std::mt19937_64& rng) {
    if (kind == "white") return random_white_state(disc.ops, rng);
    if (kind == "smooth") return random_smooth_state(disc, domain, modes, rng);
    if (kind == "constant") return normalized(State(disc.grid.size(), 1.0), disc.ops);
    if (kind == "zero") return State(disc.grid.size(), 0.0);
    throw std::invalid_argument("unknown initial state kind '" + kind + "'");
}

Json run_simulate(const RunConfig& cfg, const fs::path& out) {
    const DomainSpec domain = cfg.domain();
    const Discretization disc = assemble(domain, cfg.grid);
    auto rng = make_rng(cfg.seed, 7);
    const State u0 = initial_state(cfg.simulate_initial, disc, domain, cfg.trace_modes, rng);
    CsvWriter csv({"t", "norm", "energy", "omega_norm"});
    double prev = norm(u0, disc.ops), max_ratio = 0.0;
    bool contraction = true;
    const State u1 = propagate(u0, cfg.schedule(), disc.ops, [&](std::size_t k, double t, const State& u) {
        const double n = norm(u, disc.ops);
        if (k > 0) {
            if (n > prev * (1.0 + 1e-12)) contraction = false;
            if (prev > 0.0) max_ratio = std::max(max_ratio, n / prev);
        }
        prev = n;
        csv.row({cell(t), cell(n), cell(energy(u, disc.ops)), cell(observe_norm(disc.ops, u))});
    });
    write_text(out / "simulate.csv", csv.str());
    Json j = setup_json(cfg, domain, disc);
    j["initial"] = cfg.simulate_initial;
    j["steps"] = cfg.schedule().steps();
    j["initial_norm"] = norm(u0, disc.ops);
    j["final_norm"] = norm(u1, disc.ops);
    j["max_step_ratio"] = max_ratio;
    j["contraction"] = contraction;
    j["passed"] = contraction;
    write_json(out / "simulate.json", j);
    return j;
}

Json run_observe(const RunConfig& cfg, const fs::path& out) {
    if (cfg.ensemble_count < 20)
        throw ConfigError("ensemble.count must be at least 20 for the observability fit (got " +
                          std::to_string(cfg.ensemble_count) + ")");
    if (cfg.ensemble_initial == "zero" || cfg.trace_initial == "zero")
        throw ConfigError("ensemble.initial and trace.initial must not be zero: the ensemble would be degenerate");
    const DomainSpec domain = cfg.domain();
    const Discretization disc = assemble(domain, cfg.grid);
    const WeightParams wp = cfg.weight();
    const WeightSetting ws(disc, domain, wp);
    const Propagator prop(disc.ops, cfg.dt, cfg.scheme);

    // differential inequality: fit C on training traces, test on holdout traces
    auto trace_rng = make_rng(cfg.seed, 1);
    std::vector<State> train, hold;
    for (std::size_t i = 0; i < cfg.trace_train; ++i)
        train.push_back(initial_state(cfg.trace_initial, disc, domain, cfg.trace_modes, trace_rng));
    for (std::size_t i = 0; i < cfg.trace_holdout; ++i)
        hold.push_back(initial_state(cfg.trace_initial, disc, domain, cfg.trace_modes, trace_rng));
    std::vector<FrequencyTrace> ttr(train.size()), htr(hold.size());
    parallel_for(train.size(), [&](std::size_t i) { ttr[i] = run_trace(train[i], ws, prop, true); });
    const double c = fit_commutator_constant(ttr, ws);
    for (auto& t : ttr) {
        t.f.clear();
        t.f.shrink_to_fit();
        set_trace_constant(t, c, ws);
    }
    std::vector<std::size_t> viol(hold.size(), 0);
    parallel_for(hold.size(), [&](std::size_t i) {
        htr[i] = run_trace(hold[i], ws, prop, false);
        set_trace_constant(htr[i], c, ws);
        viol[i] = count_bound_violations(htr[i], c, ws);
    });
    std::size_t bound_checks = 0, bound_violations = 0;
    for (std::size_t i = 0; i < hold.size(); ++i) {
        bound_checks += htr[i].t.size();
        bound_violations += viol[i];
    }

    // three-point interpolation on the holdout traces
    auto triple_rng = make_rng(cfg.seed, 2);
    std::size_t interp_checks = 0, interp_violations = 0;
    double worst_margin = std::numeric_limits<double>::infinity();
    for (const auto& tr : htr) {
        const std::size_t n = tr.t.size();
        if (n < 4) break;
        for (std::size_t k = 0; k < cfg.trace_triples; ++k) {
            const std::size_t i1 = std::uniform_int_distribution<std::size_t>(1, n - 3)(triple_rng);
            const std::size_t i2 = std::uniform_int_distribution<std::size_t>(i1 + 1, n - 2)(triple_rng);
            const std::size_t i3 = std::uniform_int_distribution<std::size_t>(i2 + 1, n - 1)(triple_rng);
            const InterpolationResult r = interpolation_check(tr, i1, i2, i3, c, wp);
            ++interp_checks;
            if (!r.pass) ++interp_violations;
            worst_margin = std::min(worst_margin, r.rhs - r.lhs);
        }
    }

    // energy identity residual under dt halving, at steps small enough for CN
    // to resolve the data
    const std::size_t n_energy = std::min<std::size_t>(5, train.size());
    const double energy_dt = cfg.dt / 20.0;
    const Propagator coarse(disc.ops, energy_dt, cfg.scheme);
    const Propagator fine(disc.ops, 0.5 * energy_dt, cfg.scheme);
    std::vector<double> coarse_res(n_energy), fine_res(n_energy);
    parallel_for(n_energy, [&](std::size_t i) {
        coarse_res[i] = run_trace(train[i], ws, coarse, false).max_energy_residual;
        fine_res[i] = run_trace(train[i], ws, fine, false).max_energy_residual;
    });
    Json orders = Json::array();
    std::optional<double> min_order, max_order;
    for (std::size_t i = 0; i < n_energy; ++i) {
        if (!(coarse_res[i] > 0.0 && fine_res[i] > 0.0)) {
            orders.push_back(nullptr);
            continue;
        }
        const double o = std::log2(coarse_res[i] / fine_res[i]);
        orders.push_back(o);
        min_order = min_order ? std::min(*min_order, o) : o;
        max_order = max_order ? std::max(*max_order, o) : o;
    }
    const double expected_order = cfg.scheme == Scheme::crank_nicolson ? 2.0 : 1.0;
    const bool energy_ok = min_order && *min_order >= expected_order - 0.2 && *max_order <= expected_order + 0.2;

    // one-time observability at T, T/2, T/4
    auto obs_rng = make_rng(cfg.seed, 3);
    const auto members = [&] {
        std::vector<State> v;
        for (std::size_t i = 0; i < cfg.ensemble_count + cfg.ensemble_holdout; ++i)
            v.push_back(initial_state(cfg.ensemble_initial, disc, domain, cfg.trace_modes, obs_rng));
        return v;
    }();
    const std::size_t total = prop.steps_for(cfg.T);
    std::vector<std::size_t> obs_steps{total};
    for (std::size_t div : {2u, 4u}) {
        const std::size_t k = static_cast<std::size_t>(std::llround(static_cast<double>(total) / div));
        if (k >= 1 && std::find(obs_steps.begin(), obs_steps.end(), k) == obs_steps.end()) obs_steps.push_back(k);
    }
    std::vector<std::vector<ObservationSample>> samples(members.size());
    parallel_for(members.size(), [&](std::size_t i) {
        std::vector<ObservationSample> row(obs_steps.size());
        prop.run(members[i], total, 0.0, [&](std::size_t k, double, const State& u) {
            for (std::size_t q = 0; q < obs_steps.size(); ++q)
                if (obs_steps[q] == k) row[q] = observe_sample(members[i], u, disc.ops);
        });
        samples[i] = std::move(row);
    });
    std::vector<ObservabilitySet> sets(obs_steps.size());
    std::vector<ObservationSample> holdout;
    for (std::size_t q = 0; q < obs_steps.size(); ++q) {
        sets[q].time = static_cast<double>(obs_steps[q]) * cfg.dt;
        for (std::size_t i = 0; i < cfg.ensemble_count; ++i) sets[q].samples.push_back(samples[i][q]);
    }
    for (std::size_t i = cfg.ensemble_count; i < members.size(); ++i) holdout.push_back(samples[i][0]);
    const ObservabilityFit fit = fit_observability_constants(sets, holdout);

    const double c0 = 1.0 - wp.s * wp.s * wp.s;
    const SignConditionReport sign = sign_condition(ws, cfg.ell);
    std::optional<double> m_ell, d_ell;
    if (sign.holds) {
        m_ell = multiplier_m(c0, cfg.ell);
        d_ell = multiplier_d(c, c0, cfg.ell);
    }
    auto fitted = [&](double v) { return fit.ok ? Json(v) : Json(nullptr); };

    CsvWriter csv({"t", "normF2", "N", "Q", "bound"});
    if (!ttr.empty()) {
        const auto& t0 = ttr.front();
        for (std::size_t k = 0; k < t0.t.size(); ++k)
            csv.row({cell(t0.t[k]), cell(t0.norm_f2[k]), cell(t0.freq[k]), cell(t0.q[k]), cell(t0.bound[k])});
    }
    write_text(out / "frequency_trace.csv", csv.str());

    const Json constants = {{"C0", c0},
                            {"C", c},
                            {"ell", cfg.ell},
                            {"M_ell", optional_json(m_ell)},
                            {"D_ell", optional_json(d_ell)},
                            {"beta", fitted(fit.beta)},
                            {"mu", fitted(fit.mu)},
                            {"K", fitted(fit.k)},
                            {"M1", fitted(fit.m1)},
                            {"M2", fitted(fit.m2)},
                            {"delta", fitted(fit.delta)}};
    write_json(out / "constants.json", constants);

    Json times = Json::array();
    for (const auto& s : sets) times.push_back(s.time);
    const bool bound_ok = bound_violations == 0;
    const bool interp_ok = interp_violations == 0;
    const bool obs_ok = fit.ok && fit.holdout_violations <= 1;
    Json j = setup_json(cfg, domain, disc);
    j["differential_inequality"] = {{"C", c},
                                    {"C0", c0},
                                    {"training", train.size()},
                                    {"holdout", hold.size()},
                                    {"checks", bound_checks},
                                    {"violations", bound_violations}};
    j["interpolation"] = {{"checks", interp_checks},
                          {"violations", interp_violations},
                          {"worst_margin", interp_checks ? Json(worst_margin) : Json(nullptr)}};
    j["energy_identity"] = {{"dt", energy_dt},
                            {"expected_order", expected_order},
                            {"residual_dt", coarse_res},
                            {"residual_half_dt", fine_res},
                            {"orders", orders},
                            {"min_order", optional_json(min_order)},
                            {"max_order", optional_json(max_order)}};
    j["observability"] = {{"ok", fit.ok},
                          {"failure", fit.failure},
                          {"times", times},
                          {"training", cfg.ensemble_count},
                          {"beta", fitted(fit.beta)},
                          {"log_lambda", fitted(fit.log_lambda)},
                          {"mu", fitted(fit.mu)},
                          {"K", fitted(fit.k)},
                          {"K1", fitted(fit.k1)},
                          {"K2", fitted(fit.k2)},
                          {"M1", fitted(fit.m1)},
                          {"M2", fitted(fit.m2)},
                          {"delta", fitted(fit.delta)},
                          {"holdout", fit.holdout_size},
                          {"holdout_violations", fit.holdout_violations}};
    j["sign_condition"] = {{"ell", cfg.ell},
                           {"min_phi", sign.min_phi},
                           {"max_phi_outside_omega", sign.max_phi_outside},
                           {"value", sign.value},
                           {"holds", sign.holds}};
    j["flags"] = {{"differential_inequality", bound_ok},
                  {"interpolation", interp_ok},
                  {"energy_identity", energy_ok},
                  {"observability", obs_ok}};
    j["passed"] = bound_ok && interp_ok && energy_ok && obs_ok;
    write_json(out / "observe.json", j);
    return j;
}

Json run_commutator(const RunConfig& cfg, const fs::path& out) {
    const DomainSpec domain = cfg.domain();
    const WeightParams wp = cfg.weight();
    std::vector<Resolution> levels;
    for (int k = 0; k < cfg.commutator_levels; ++k) {
        if (cfg.kind == DomainKind::interval)
            levels.push_back({cfg.grid.n << k, 0, 0});
        else
            levels.push_back({0, cfg.grid.nr << k, cfg.grid.ntheta << k});
    }
    const ManufacturedField f = default_manufactured_field(domain, wp, cfg.commutator_t);
    const auto rows = commutator_identity_check(f, domain, wp, cfg.commutator_t, levels);

    CsvWriter csv({"resolution", "dofs", "lhs", "rhs", "rel_residual", "order"});
    Json jrows = Json::array();
    bool monotone = true;
    std::optional<double> min_order;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        const std::string res = cfg.kind == DomainKind::interval
                                    ? std::to_string(r.res.n)
                                    : std::to_string(r.res.nr) + "x" + std::to_string(r.res.ntheta);
        csv.row({res, cell(r.dofs), cell(r.lhs), cell(r.rhs), cell(r.rel_residual),
                 r.order ? cell(*r.order) : std::string()});
        if (i > 0 && !(r.rel_residual < rows[i - 1].rel_residual)) monotone = false;
        if (r.order) min_order = min_order ? std::min(*min_order, *r.order) : *r.order;
        jrows.push_back({{"resolution", res},
                         {"dofs", r.dofs},
                         {"lhs", r.lhs},
                         {"rhs", r.rhs},
                         {"rel_residual", r.rel_residual},
                         {"order", optional_json(r.order)}});
    }
    write_text(out / "commutator.csv", csv.str());
    const bool order_ok = cfg.kind == DomainKind::disk || (min_order && *min_order >= 1.9);
    Json j = {{"domain", domain.describe()}, {"t", cfg.commutator_t}, {"s", cfg.s}, {"h_weight", cfg.h_weight},
              {"T", cfg.T}, {"rows", jrows}, {"monotone", monotone}, {"min_order", optional_json(min_order)},
              {"order_ok", order_ok}, {"passed", monotone && order_ok}};
    write_json(out / "commutator.json", j);
    return j;
}

Json run_control(const RunConfig& cfg, const fs::path& out) {
    const DomainSpec domain = cfg.domain();
    const Discretization disc = assemble(domain, cfg.grid);
    const Propagator prop(disc.ops, cfg.dt, cfg.scheme);
    const ControlSolver solver(disc.ops, prop);
    const double eps = cfg.eps.front();

    std::optional<CostConstants> fitted_constants;
    if (!cfg.kappa && cfg.kappa_seed == "fitted") {
        fitted_constants = read_fitted_constants(out);
        if (!fitted_constants)
            throw ConfigError("control.kappa_seed = fitted needs constants.json with M1, M2, delta in '" +
                              out.string() + "' (run observe first)");
    }
    const double kappa0 = fitted_constants ? kappa_seed(*fitted_constants, cfg.T - cfg.tau, eps) : 1.0;

    auto rng = make_rng(cfg.seed, 4);
    std::vector<State> psis;
    if (cfg.psi0 == "zero")
        psis.emplace_back(disc.grid.size(), 0.0);
    else
        psis = white_states(cfg.members, disc.ops, rng);
    auto zrng = make_rng(cfg.seed, 5);
    const std::vector<State> zetas = white_states(cfg.duality_samples, disc.ops, zrng);

    ControlProblem tmpl;
    tmpl.tau = cfg.tau;
    tmpl.T = cfg.T;
    tmpl.eps = eps;
    tmpl.kappa = cfg.kappa;
    tmpl.cg_tol = cfg.cg_tol;
    tmpl.cg_maxit = cfg.cg_maxit;

    std::vector<ControlResult> results(psis.size());
    std::vector<int> doublings(psis.size(), 0);
    parallel_for(psis.size(), [&](std::size_t i) {
        ControlProblem p = tmpl;
        p.psi0 = psis[i];
        if (cfg.kappa) {
            results[i] = solver.synthesize(p, *cfg.kappa);
        } else {
            Calibration cal = solver.calibrate_kappa(p, kappa0, cfg.max_doublings);
            doublings[i] = cal.doublings;
            results[i] = std::move(cal.result);
        }
        solver.verify_duality(results[i], p, zetas);
    });

    constexpr double tol = 1e-10;
    Json members = Json::array();
    bool all = true;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const ControlResult& r = results[i];
        const double dual = r.flags.duality_residual.value_or(0.0);
        const bool cg_ok = r.residual_el <= tol;
        const bool dual_ok = dual <= tol;
        all = all && r.flags.target && r.flags.cost && cg_ok && dual_ok;
        members.push_back({{"kappa", r.kappa},
                           {"eps", r.eps},
                           {"norm_h", r.norm_h},
                           {"norm_PsiT", r.norm_psi_final},
                           {"norm_Psi0", r.norm_psi0},
                           {"cost", r.cost},
                           {"tau_used", r.tau_used},
                           {"doublings", doublings[i]},
                           {"cg_iterations", r.cg_iterations},
                           {"apriori_ok", r.apriori_ok},
                           {"observation_ok", r.observation_ok},
                           {"flags", {{"target", r.flags.target}, {"cost", r.flags.cost}, {"cg", cg_ok},
                                      {"duality", dual_ok}}},
                           {"residuals", {{"cg", r.residual_el}, {"duality", dual},
                                          {"terminal_mismatch", r.terminal_mismatch}}}});
    }
    Json j = setup_json(cfg, domain, disc);
    j["tau"] = cfg.tau;
    j["eps"] = eps;
    j["kappa_mode"] = cfg.kappa ? "fixed" : "calibrated";
    j["kappa_start"] = cfg.kappa ? *cfg.kappa : kappa0;
    j["members"] = members;
    j["duality_samples"] = zetas.size();
    j["passed"] = all;
    write_json(out / "control.json", j);
    return j;
}

Json run_cost_study(const RunConfig& cfg, const fs::path& out) {
    if (cfg.eps.size() < 4) throw ConfigError("control.eps needs at least 4 values for the cost study");
    const auto [lo, hi] = std::minmax_element(cfg.eps.begin(), cfg.eps.end());
    if (*hi / *lo < 10.0 - 1e-12) throw ConfigError("control.eps values must span at least one decade for the cost study");
    const DomainSpec domain = cfg.domain();
    const Discretization disc = assemble(domain, cfg.grid);
    const Propagator prop(disc.ops, cfg.dt, cfg.scheme);
    const ControlSolver solver(disc.ops, prop);

    const std::optional<CostConstants> fitted_constants = read_fitted_constants(out);
    if (cfg.kappa_seed == "fitted" && !fitted_constants)
        throw ConfigError("control.kappa_seed = fitted needs constants.json with M1, M2, delta in '" + out.string() +
                          "' (run observe first)");
    auto rng = make_rng(cfg.seed, 6);
    const std::vector<State> members = white_states(cfg.members, disc.ops, rng);
    ControlProblem tmpl;
    tmpl.tau = cfg.tau;
    tmpl.T = cfg.T;
    tmpl.cg_tol = cfg.cg_tol;
    tmpl.cg_maxit = cfg.cg_maxit;
    CostStudy study = cost_study(solver, tmpl, cfg.eps, members,
                                 cfg.kappa_seed == "fitted" ? fitted_constants : std::nullopt, cfg.max_doublings);
    if (!study.fitted_delta && fitted_constants) study.fitted_delta = fitted_constants->delta;

    CsvWriter csv({"eps", "sup_cost", "kappa", "passes"});
    Json rows = Json::array();
    bool monotone = true, rows_ok = true;
    for (std::size_t i = 0; i < study.rows.size(); ++i) {
        const CostRow& r = study.rows[i];
        csv.row({cell(r.eps), cell(r.sup_cost), cell(r.kappa), cell(r.passes)});
        rows.push_back({{"eps", r.eps},
                        {"sup_cost", r.sup_cost},
                        {"kappa", r.kappa},
                        {"passes", r.passes},
                        {"free_members", r.free_members}});
        rows_ok = rows_ok && r.passes;
        if (i > 0 && r.sup_cost < study.rows[i - 1].sup_cost) monotone = false;
    }
    write_text(out / "cost_study.csv", csv.str());
    const bool slope_ok = study.slope && *study.slope >= 0.0;
    Json j = setup_json(cfg, domain, disc);
    j["tau"] = cfg.tau;
    j["members"] = members.size();
    j["rows"] = rows;
    j["slope"] = optional_json(study.slope);
    j["fitted_delta"] = optional_json(study.fitted_delta);
    j["monotone"] = monotone;
    j["complete"] = study.complete;
    j["failure"] = study.failure;
    j["passed"] = study.complete && rows_ok && monotone && slope_ok;
    write_json(out / "cost_study.json", j);
    return j;
}

Json run_report(const fs::path& dir) {
    Json j = merge_reports(dir);
    write_json(dir / "report.json", j);
    return j;
}

}  // namespace dynbc
