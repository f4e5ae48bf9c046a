#include "dynbc/logconvexity.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace dynbc {

WeightSetting::WeightSetting(const Discretization& d, const DomainSpec& dom, const WeightParams& p)
    : disc(&d), domain(dom), params(p) {
    params.validate();
    phi.resize(d.grid.size());
    for (std::size_t k = 0; k < phi.size(); ++k) phi[k] = weight_phi_bundle(domain, d.grid.nodes[k]).phi;
}

std::vector<double> WeightSetting::big_phi_nodes(double t) const {
    const double ups = params.time_scale(t);
    if (!(ups > 0.0)) throw std::domain_error("weight: T - t + h must stay positive");
    std::vector<double> out(phi.size());
    double worst = 0.0;
    for (std::size_t k = 0; k < phi.size(); ++k) {
        out[k] = params.s * phi[k] / ups;
        worst = std::max(worst, std::abs(out[k]));
    }
    if (worst > 600.0)
        throw std::domain_error("weight: exponential weight overflows; use a larger weight.h or a smaller weight.s");
    return out;
}

namespace {
void check_time(const WeightParams& p, double t) {
    const double tol = 1e-12 * std::max(1.0, p.T);
    if (t < -tol || t > p.T + tol) throw std::out_of_range("time outside [0, T]");
}
}  // namespace

State weighted_transform(const State& u, double t, const WeightSetting& ws) {
    check_time(ws.params, t);
    if (u.size() != ws.phi.size()) throw std::invalid_argument("weighted_transform: state size mismatch");
    const auto big = ws.big_phi_nodes(t);
    State f(u.size());
    for (std::size_t k = 0; k < u.size(); ++k) f[k] = u[k] * std::exp(0.5 * big[k]);
    return f;
}

State inverse_weighted_transform(const State& f, double t, const WeightSetting& ws) {
    check_time(ws.params, t);
    if (f.size() != ws.phi.size()) throw std::invalid_argument("inverse_weighted_transform: state size mismatch");
    const auto big = ws.big_phi_nodes(t);
    State u(f.size());
    for (std::size_t k = 0; k < f.size(); ++k) u[k] = f[k] * std::exp(-0.5 * big[k]);
    return u;
}

WeightedOperators::EdgeTerms WeightedOperators::edge_terms(const WeightSetting& ws, double t) {
    const auto big = ws.big_phi_nodes(t);
    const double ups = ws.params.time_scale(t);
    const OperatorSet& ops = ws.ops();
    EdgeTerms e;
    e.cosh_k.resize(ops.edges.size());
    e.sinh_k.resize(ops.edges.size());
    e.diag.assign(ops.size(), 0.0);
    for (std::size_t k = 0; k < ops.size(); ++k) e.diag[k] = 0.5 * ops.mass[k] * ws.params.s * ws.phi[k] / (ups * ups);
    for (std::size_t q = 0; q < ops.edges.size(); ++q) {
        const Edge& ed = ops.edges[q];
        const double d = 0.5 * (big[ed.i] - big[ed.j]);
        e.cosh_k[q] = ed.kappa * std::cosh(d);
        e.sinh_k[q] = ed.kappa * std::sinh(d);
        e.diag[ed.i] -= ed.kappa;
        e.diag[ed.j] -= ed.kappa;
    }
    return e;
}

// Centered difference of the edge terms over [t - dt, t + dt]. The constant
// -sum kappa part of the diagonal drops out exactly, and the cosh difference
// is taken in product form to avoid cancellation.
WeightedOperators::EdgeTerms WeightedOperators::rate_terms(const WeightSetting& ws, double t, double dt) {
    const auto hi = ws.big_phi_nodes(t + dt);
    const auto lo = ws.big_phi_nodes(t - dt);
    const double uh = ws.params.time_scale(t + dt), ul = ws.params.time_scale(t - dt);
    const double inv = 1.0 / (2.0 * dt);
    const OperatorSet& ops = ws.ops();
    EdgeTerms e;
    e.cosh_k.resize(ops.edges.size());
    e.diag.resize(ops.size());
    const double scale = (1.0 / (uh * uh) - 1.0 / (ul * ul)) * inv;
    for (std::size_t k = 0; k < ops.size(); ++k) e.diag[k] = 0.5 * ops.mass[k] * ws.params.s * ws.phi[k] * scale;
    for (std::size_t q = 0; q < ops.edges.size(); ++q) {
        const Edge& ed = ops.edges[q];
        const double dh = 0.5 * (hi[ed.i] - hi[ed.j]);
        const double dl = 0.5 * (lo[ed.i] - lo[ed.j]);
        e.cosh_k[q] = ed.kappa * 2.0 * std::sinh(0.5 * (dh + dl)) * std::sinh(0.5 * (dh - dl)) * inv;
    }
    return e;
}

WeightedOperators::WeightedOperators(const WeightSetting& ws, double t)
    : ws_(&ws), t_(t), ups_(ws.params.time_scale(t)), dts_(1e-6 * ws.params.time_scale(t)) {
    check_time(ws.params, t);
    now_ = edge_terms(ws, t);
    rate_ = rate_terms(ws, t, dts_);
    const std::size_t n = ws.phi.size();
    const double s = ws.params.s;
    half_dphi_.resize(n);
    eta_.resize(n);
    theta_w_.assign(n, 0.0);
    const Grid& g = ws.grid();
    for (std::size_t k = 0; k < n; ++k) {
        half_dphi_[k] = 0.5 * s * ws.phi[k] / (ups_ * ups_);
        const PhiBundle pb = weight_phi_bundle(ws.domain, g.nodes[k]);
        eta_[k] = s / (2.0 * ups_ * ups_) * (pb.phi + 0.5 * s * norm2(pb.grad));
        if (g.is_boundary(k)) {
            const Point nu = g.normals[k - g.trace_offset()];
            const Point tangential = pb.grad - dot(pb.grad, nu) * nu;
            theta_w_[k] = s / (2.0 * ups_ * ups_) * (pb.phi + 0.5 * s * norm2(tangential));
        }
    }
}

void WeightedOperators::apply_terms(const EdgeTerms& e, std::span<const double> x, std::span<double> y) const {
    const auto& edges = ws_->ops().edges;
    for (std::size_t k = 0; k < x.size(); ++k) y[k] = e.diag[k] * x[k];
    for (std::size_t q = 0; q < edges.size(); ++q) {
        y[edges[q].i] += e.cosh_k[q] * x[edges[q].j];
        y[edges[q].j] += e.cosh_k[q] * x[edges[q].i];
    }
}

void WeightedOperators::apply_ms(std::span<const double> x, std::span<double> y) const { apply_terms(now_, x, y); }

void WeightedOperators::apply_b(std::span<const double> x, std::span<double> y) const {
    const auto& edges = ws_->ops().edges;
    std::fill(y.begin(), y.end(), 0.0);
    for (std::size_t q = 0; q < edges.size(); ++q) {
        y[edges[q].i] += now_.sinh_k[q] * x[edges[q].j];
        y[edges[q].j] -= now_.sinh_k[q] * x[edges[q].i];
    }
}

void WeightedOperators::apply_dms(std::span<const double> x, std::span<double> y) const {
    apply_terms(rate_, x, y);
}

State WeightedOperators::apply_s(const State& x) const {
    State y(x.size());
    apply_ms(x, y);
    const auto& inv = ws_->ops().inv_mass;
    for (std::size_t k = 0; k < y.size(); ++k) y[k] *= inv[k];
    return y;
}

State WeightedOperators::apply_anti(const State& x) const {
    State y(x.size());
    apply_b(x, y);
    const auto& inv = ws_->ops().inv_mass;
    for (std::size_t k = 0; k < y.size(); ++k) y[k] *= inv[k];
    return y;
}

State WeightedOperators::apply_p1(const State& x) const {
    const auto big = ws_->big_phi_nodes(t_);
    State u(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) u[k] = x[k] * std::exp(-0.5 * big[k]);
    State au = ws_->ops().apply(u);
    State y(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) y[k] = half_dphi_[k] * x[k] + std::exp(0.5 * big[k]) * au[k];
    return y;
}

double WeightedOperators::quad_s(const State& f) const {
    State y(f.size());
    apply_ms(f, y);
    return kernels::dot(f, y);
}

double WeightedOperators::commutator_form(const State& f) const {
    const std::size_t n = f.size();
    std::vector<double> ds(n), sf(n), bf(n);
    apply_dms(f, ds);
    apply_ms(f, sf);
    apply_b(f, bf);
    return -kernels::dot(f, ds) - 2.0 * kernels::wdot(ws_->ops().inv_mass, sf, bf);
}

void WeightedOperators::apply_commutator(std::span<const double> x, std::span<double> y) const {
    const std::size_t n = x.size();
    const auto& inv = ws_->ops().inv_mass;
    std::vector<double> ds(n), tmp(n), tmp2(n);
    apply_dms(x, ds);
    // - MS M^{-1} B x
    apply_b(x, tmp);
    for (std::size_t k = 0; k < n; ++k) tmp[k] *= inv[k];
    apply_ms(tmp, tmp2);
    for (std::size_t k = 0; k < n; ++k) y[k] = -ds[k] - tmp2[k];
    // + B M^{-1} MS x
    apply_ms(x, tmp);
    for (std::size_t k = 0; k < n; ++k) tmp[k] *= inv[k];
    apply_b(tmp, tmp2);
    for (std::size_t k = 0; k < n; ++k) y[k] += tmp2[k];
}

WeightedOperators build_weighted_operators(double t, const WeightSetting& ws) { return WeightedOperators(ws, t); }

double frequency(const State& f, const WeightedOperators& wops) {
    const double n2 = inner(f, f, wops.setting().ops());
    if (!(n2 > 0.0)) throw DegenerateDataError("frequency is undefined for F = 0");
    return -wops.quad_s(f) / n2;
}

FrequencyTrace run_trace(const State& u0, const WeightSetting& ws, const Propagator& prop, bool keep_states) {
    const OperatorSet& ops = ws.ops();
    if (!(norm(u0, ops) > 0.0)) throw DegenerateDataError("run_trace needs nonzero initial data");
    const WeightParams& p = ws.params;
    const std::size_t nsteps = prop.steps_for(p.T);
    FrequencyTrace tr;
    tr.c0 = 1.0 - p.s * p.s * p.s;
    prop.run(u0, nsteps, 0.0, [&](std::size_t, double t, const State& u) {
        t = std::min(t, p.T);
        const State f = weighted_transform(u, t, ws);
        const WeightedOperators w(ws, t);
        const double n2 = inner(f, f, ops);
        if (!(n2 > 0.0) || !std::isfinite(n2)) throw DegenerateDataError("weighted state vanished along the trace");
        const double neg_s = -w.quad_s(f);
        tr.t.push_back(t);
        tr.norm_f2.push_back(n2);
        tr.neg_s.push_back(neg_s);
        tr.freq.push_back(neg_s / n2);
        tr.q.push_back(w.commutator_form(f));
        if (keep_states) tr.f.push_back(f);
    });
    const std::size_t n = tr.t.size();
    const double dt = prop.dt();
    tr.energy_residual.assign(n, 0.0);
    tr.dfreq.assign(n, 0.0);
    double c_freq = 0.0, c_comm = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double ups = p.time_scale(tr.t[k]);
        c_comm = std::max(c_comm, (tr.q[k] - (1.0 + tr.c0) / ups * tr.neg_s[k]) / tr.norm_f2[k]);
        if (k == 0 || k + 1 == n) continue;
        const double dn2 = (tr.norm_f2[k + 1] - tr.norm_f2[k - 1]) / (2.0 * dt);
        tr.energy_residual[k] = std::abs(0.5 * dn2 + tr.neg_s[k]);
        tr.max_energy_residual = std::max(tr.max_energy_residual, tr.energy_residual[k]);
        tr.dfreq[k] = (tr.freq[k + 1] - tr.freq[k - 1]) / (2.0 * dt);
        c_freq = std::max(c_freq, tr.dfreq[k] - (1.0 + tr.c0) / ups * tr.freq[k]);
    }
    const double h2 = p.h * p.h;
    tr.c_commutator = std::max(0.0, h2 * c_comm);
    tr.c_frequency = std::max(0.0, h2 * c_freq);
    set_trace_constant(tr, std::max(tr.c_commutator, tr.c_frequency), ws);
    return tr;
}

void set_trace_constant(FrequencyTrace& tr, double c, const WeightSetting& ws) {
    const WeightParams& p = ws.params;
    tr.c = c;
    tr.bound.resize(tr.t.size());
    for (std::size_t k = 0; k < tr.t.size(); ++k)
        tr.bound[k] = (1.0 + tr.c0) / p.time_scale(tr.t[k]) * tr.neg_s[k] + c / (p.h * p.h) * tr.norm_f2[k];
}

double fit_commutator_constant(std::span<const FrequencyTrace> training, const WeightSetting& ws) {
    if (training.empty()) throw std::invalid_argument("fit_commutator_constant: empty training set");
    const std::size_t nt = training.front().t.size();
    double c = 0.0;
    for (const auto& tr : training) {
        if (tr.f.size() != nt || tr.t.size() != nt)
            throw std::invalid_argument("fit_commutator_constant: traces need stored states on a common time grid");
        c = std::max(c, tr.c);
    }
    const OperatorSet& ops = ws.ops();
    const std::size_t n = ops.size();
    const std::size_t m = training.size();
    const double c0 = training.front().c0;
    double worst = 0.0;
    std::vector<double> y(n);
    for (std::size_t k = 0; k < nt; ++k) {
        const double t = training.front().t[k];
        const WeightedOperators w(ws, t);
        Eigen::MatrixXd gram(m, m);
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = 0; b <= a; ++b)
                gram(a, b) = gram(b, a) = kernels::wdot(ops.mass, training[a].f[k], training[b].f[k]);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ge(gram);
        const double top = ge.eigenvalues().maxCoeff();
        std::vector<State> basis;
        for (Eigen::Index j = 0; j < ge.eigenvalues().size(); ++j) {
            const double lam = ge.eigenvalues()(j);
            if (!(lam > 1e-13 * top)) continue;
            State v(n, 0.0);
            for (std::size_t a = 0; a < m; ++a) kernels::axpy(ge.eigenvectors()(a, j) / std::sqrt(lam), training[a].f[k], v);
            basis.push_back(std::move(v));
        }
        const std::size_t r = basis.size();
        std::vector<State> gv(r, State(n));
        const double shift = (1.0 + c0) / w.time_scale();
        for (std::size_t a = 0; a < r; ++a) {
            w.apply_commutator(basis[a], gv[a]);
            w.apply_ms(basis[a], y);
            kernels::axpy(shift, y, gv[a]);
        }
        Eigen::MatrixXd hm(r, r);
        for (std::size_t a = 0; a < r; ++a)
            for (std::size_t b = 0; b <= a; ++b) hm(a, b) = hm(b, a) = 0.5 * (kernels::dot(basis[a], gv[b]) + kernels::dot(basis[b], gv[a]));
        if (r > 0) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> he(hm, Eigen::EigenvaluesOnly);
            worst = std::max(worst, he.eigenvalues().maxCoeff());
        }
    }
    const WeightParams& p = ws.params;
    return std::max(c, p.h * p.h * worst);
}

std::size_t count_bound_violations(const FrequencyTrace& tr, double c, const WeightSetting& ws, double rel_slack) {
    const WeightParams& p = ws.params;
    std::size_t bad = 0;
    for (std::size_t k = 0; k < tr.t.size(); ++k) {
        const double lin = (1.0 + tr.c0) / p.time_scale(tr.t[k]) * tr.neg_s[k];
        const double bound = lin + c / (p.h * p.h) * tr.norm_f2[k];
        const double scale = std::abs(lin) + std::abs(tr.q[k]) + c / (p.h * p.h) * tr.norm_f2[k];
        if (tr.q[k] > bound + rel_slack * scale) ++bad;
    }
    return bad;
}

double interpolation_exponent(double t1, double t2, double t3, double c0, const WeightParams& p) {
    if (!(t1 < t2 && t2 <= t3)) throw std::invalid_argument("interpolation needs t1 < t2 <= t3");
    auto antider = [&](double t) { return std::pow(p.time_scale(t), -c0) / c0; };
    return (antider(t3) - antider(t2)) / (antider(t2) - antider(t1));
}

InterpolationResult interpolation_check(const FrequencyTrace& tr, std::size_t i1, std::size_t i2, std::size_t i3,
                                        double c, const WeightParams& p, double rel_slack) {
    if (!(i1 < i2 && i2 <= i3) || i3 >= tr.t.size())
        throw std::invalid_argument("interpolation needs ordered indices inside the trace");
    const double t1 = tr.t[i1], t2 = tr.t[i2], t3 = tr.t[i3];
    if (!(t1 > 0.0)) throw std::invalid_argument("interpolation needs t1 > 0");
    InterpolationResult r;
    r.m = interpolation_exponent(t1, t2, t3, tr.c0, p);
    r.d = 2.0 * (1.0 + r.m) * (t3 - t1) * (t3 - t1) * c / (p.h * p.h);
    r.lhs = (1.0 + r.m) * std::log(tr.norm_f2[i2]);
    r.rhs = r.m * std::log(tr.norm_f2[i1]) + std::log(tr.norm_f2[i3]) + r.d;
    const double scale = std::max({1.0, std::abs(r.lhs), std::abs(r.rhs)});
    r.pass = r.lhs - r.rhs <= rel_slack * scale;
    return r;
}

ObservationSample observe_sample(const State& u0, const State& u_final, const OperatorSet& ops) {
    return {norm(u_final, ops), observe_norm(ops, u_final), norm(u0, ops)};
}

CostConstants cost_constants(double beta, double k1, double k2) {
    if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("cost_constants: beta must lie in (0, 1)");
    if (!(k1 > 0.0)) throw std::invalid_argument("cost_constants: K1 must be positive");
    CostConstants c;
    c.m1 = std::pow(k1, 1.0 / beta) * std::pow(1.0 - beta, (1.0 - beta) / (2.0 * beta)) * std::sqrt(beta);
    c.m2 = k2 / beta;
    c.delta = (1.0 - beta) / beta;
    return c;
}

namespace {
struct LogPair {
    double a;  // log ||U(T)|| / ||U(0)||
    double b;  // log ||u(T)||_omega / ||U(0)||
};

std::vector<LogPair> log_pairs(std::span<const ObservationSample> s) {
    std::vector<LogPair> out;
    for (const auto& x : s) {
        if (!(x.norm_initial > 0.0)) throw DegenerateDataError("observability ensemble contains zero initial data");
        if (!(x.norm_final > 0.0) || !(x.norm_omega > 0.0))
            throw DegenerateDataError("observability ensemble member vanished at the observation time");
        out.push_back({std::log(x.norm_final / x.norm_initial), std::log(x.norm_omega / x.norm_initial)});
    }
    return out;
}

double max_shift(const std::vector<LogPair>& v, double beta) {
    double c = -std::numeric_limits<double>::infinity();
    for (const auto& p : v) c = std::max(c, p.a - beta * p.b);
    return c;
}
}  // namespace

ObservabilityFit fit_observability_constants(std::span<const ObservabilitySet> training,
                                             std::span<const ObservationSample> holdout) {
    if (training.empty()) throw std::invalid_argument("observability fit needs at least one observation time");
    if (training.front().samples.size() < 20)
        throw std::invalid_argument("observability fit needs an ensemble of at least 20 members");
    ObservabilityFit fit;
    const auto main = log_pairs(training.front().samples);
    const double nm = static_cast<double>(main.size());
    double ma = 0.0, mb = 0.0;
    for (const auto& p : main) {
        ma += p.a / nm;
        mb += p.b / nm;
    }
    double sab = 0.0, sbb = 0.0;
    for (const auto& p : main) {
        sab += (p.a - ma) * (p.b - mb);
        sbb += (p.b - mb) * (p.b - mb);
    }
    if (!(sbb > 1e-20 * nm * (1.0 + mb * mb))) {
        fit.failure = "degenerate ensemble: observations have no spread";
        return fit;
    }
    fit.beta = sab / sbb;
    if (!(fit.beta > 0.0 && fit.beta < 1.0)) {
        std::ostringstream os;
        os.precision(17);
        os << "fitted beta " << fit.beta << " lies outside (0, 1)";
        fit.failure = os.str();
        return fit;
    }
    const double c_main = max_shift(main, fit.beta);
    fit.log_lambda = c_main / fit.beta;
    const double t_main = training.front().time;

    // log Lambda(T) = log mu + K/T over the observation times
    std::vector<double> xs{1.0 / t_main}, ys{fit.log_lambda};
    for (std::size_t j = 1; j < training.size(); ++j) {
        const auto pairs = log_pairs(training[j].samples);
        xs.push_back(1.0 / training[j].time);
        ys.push_back(max_shift(pairs, fit.beta) / fit.beta);
    }
    double k = 0.0;
    if (xs.size() >= 2) {
        double mx = 0.0, my = 0.0;
        for (std::size_t j = 0; j < xs.size(); ++j) {
            mx += xs[j] / xs.size();
            my += ys[j] / xs.size();
        }
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t j = 0; j < xs.size(); ++j) {
            sxy += (xs[j] - mx) * (ys[j] - my);
            sxx += (xs[j] - mx) * (xs[j] - mx);
        }
        if (sxx > 0.0) k = std::max(0.0, sxy / sxx);
    }
    fit.k = k;
    fit.mu = std::exp(fit.log_lambda - k / t_main);
    fit.k1 = std::pow(fit.mu, fit.beta);
    fit.k2 = fit.beta * k;
    const CostConstants lc = cost_constants(fit.beta, fit.k1, fit.k2);
    fit.m1 = lc.m1;
    fit.m2 = lc.m2;
    fit.delta = lc.delta;

    const auto ho = log_pairs(holdout);
    fit.holdout_size = ho.size();
    const double tol = 1e-12 * std::max(1.0, std::abs(c_main));
    for (const auto& p : ho)
        if (p.a - fit.beta * p.b > c_main + tol) ++fit.holdout_violations;
    fit.ok = true;
    return fit;
}

double multiplier_m(double c0, double ell) {
    if (!(c0 > 0.0 && c0 < 1.0)) throw std::invalid_argument("C0 must lie in (0, 1)");
    if (!(ell > 1.0)) throw std::invalid_argument("weight.ell must exceed 1");
    return (std::pow(ell + 1.0, c0) - 1.0) / (1.0 - std::pow((ell + 1.0) / (2.0 * ell + 1.0), c0));
}

double multiplier_d(double c, double c0, double ell) { return 2.0 * c * ell * ell * (1.0 + multiplier_m(c0, ell)); }

SignConditionReport sign_condition(const WeightSetting& ws, double ell) {
    const double s = ws.params.s;
    const double mell = multiplier_m(1.0 - s * s * s, ell);
    SignConditionReport r;
    r.min_phi = std::numeric_limits<double>::infinity();
    r.max_phi_outside = -std::numeric_limits<double>::infinity();
    const Grid& g = ws.grid();
    for (std::size_t k = 0; k < g.size(); ++k) {
        r.min_phi = std::min(r.min_phi, ws.phi[k]);
        if (!ws.domain.in_omega(g.nodes[k])) r.max_phi_outside = std::max(r.max_phi_outside, ws.phi[k]);
    }
    r.value = -(1.0 + mell) / (1.0 + ell) * r.min_phi + r.max_phi_outside;
    r.holds = r.value < 0.0;
    return r;
}

}  // namespace dynbc
