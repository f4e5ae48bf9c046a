#include "dynbc/control.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dynbc {

void ControlProblem::validate(std::size_t n) const {
    if (psi0.size() != n) throw std::invalid_argument("control: initial state size mismatch");
    if (!(T > 0.0)) throw std::invalid_argument("time.T must be positive");
    if (!(tau > 0.0 && tau < T)) throw std::invalid_argument("impulse.tau must lie in (0, T)");
    if (!(eps > 0.0)) throw std::invalid_argument("control.eps must be positive");
    if (kappa && !(*kappa > 0.0)) throw std::invalid_argument("control.kappa must be positive");
    if (!(cg_tol > 0.0)) throw std::invalid_argument("control.cg_tol must be positive");
    if (cg_maxit == 0) throw std::invalid_argument("control.cg_maxit must be positive");
}

std::size_t ControlSolver::total_steps(const ControlProblem& prob) const { return prop_->steps_for(prob.T); }

std::size_t ControlSolver::tau_steps(const ControlProblem& prob) const {
    const auto k = static_cast<std::size_t>(std::llround(prob.tau / prop_->dt()));
    if (k == 0 || k >= total_steps(prob)) throw std::invalid_argument("impulse.tau rounds to an endpoint of (0, T)");
    return k;
}

State ControlSolver::free_final(const ControlProblem& prob) const {
    return prop_->run(prob.psi0, total_steps(prob));
}

State ControlSolver::gramian_apply(const State& zeta0, const ControlProblem& prob, double kappa) const {
    const std::size_t ks = total_steps(prob) - tau_steps(prob);
    State v = prop_->run(zeta0, ks);
    State w(v.size(), 0.0);
    for (std::size_t q : ops_->omega_nodes) w[q] = v[q];
    w = prop_->run(w, ks);
    const double k2 = kappa * kappa, e2 = prob.eps * prob.eps;
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = k2 * w[i] + e2 * zeta0[i];
    return w;
}

DualSolution ControlSolver::solve_dual(const ControlProblem& prob, double kappa) const {
    prob.validate(ops_->size());
    const std::size_t n = ops_->size();
    State b = free_final(prob);
    for (double& x : b) x = -x;
    DualSolution out;
    out.theta0.assign(n, 0.0);
    const double bnorm = norm(b, *ops_);
    if (bnorm == 0.0) return out;
    State r = b, p = b;
    double rr = inner(r, r, *ops_);
    std::size_t it = 0;
    while (std::sqrt(rr) > prob.cg_tol * bnorm) {
        if (it >= prob.cg_maxit) {
            const double res = std::sqrt(rr) / bnorm;
            std::ostringstream os;
            os.precision(3);
            os << "dual CG did not converge: relative residual " << res << " after " << it << " iterations";
            throw ConvergenceError(os.str(), res, it);
        }
        ++it;
        const State q = gramian_apply(p, prob, kappa);
        const double pq = inner(p, q, *ops_);
        if (!(pq > 0.0)) throw ConvergenceError("dual CG breakdown (non-positive curvature)", std::sqrt(rr) / bnorm, it);
        const double alpha = rr / pq;
        kernels::axpy(alpha, p, out.theta0);
        kernels::axpy(-alpha, q, r);
        const double rr_new = inner(r, r, *ops_);
        kernels::xpay(r, rr_new / rr, p);
        rr = rr_new;
    }
    out.iterations = it;
    const State g = gramian_apply(out.theta0, prob, kappa);
    State res(n);
    for (std::size_t i = 0; i < n; ++i) res[i] = b[i] - g[i];
    out.residual = norm(res, *ops_) / bnorm;
    return out;
}

ControlResult ControlSolver::synthesize(const ControlProblem& prob, double kappa) const {
    if (!(kappa > 0.0)) throw std::invalid_argument("synthesize: kappa must be positive");
    const DualSolution dual = solve_dual(prob, kappa);
    const std::size_t ks = total_steps(prob) - tau_steps(prob);
    ControlResult r;
    r.kappa = kappa;
    r.eps = prob.eps;
    r.theta0 = dual.theta0;
    r.residual_el = dual.residual;
    r.cg_iterations = dual.iterations;
    const State v = prop_->run(dual.theta0, ks);
    r.h = restrict_omega(*ops_, v);
    r.observation = norm_omega(*ops_, r.h);
    for (double& x : r.h) x *= kappa * kappa;

    ImpulseEvent ev{prob.tau, r.h};
    const ImpulsiveRun run = propagate_impulsive(prob.psi0, ev, prob.T, *prop_);
    r.psi_final = run.state;
    r.tau_used = run.tau_used;

    const double e2 = prob.eps * prob.eps;
    r.norm_h = norm_omega(*ops_, r.h);
    r.norm_psi0 = norm(prob.psi0, *ops_);
    r.norm_psi_final = norm(r.psi_final, *ops_);
    State mismatch = r.psi_final;
    kernels::axpy(e2, r.theta0, mismatch);
    const double mnorm = norm(mismatch, *ops_);
    r.terminal_mismatch = r.norm_psi0 > 0.0 ? mnorm / r.norm_psi0 : mnorm;
    r.cost = r.norm_h * r.norm_h / (kappa * kappa) + r.norm_psi_final * r.norm_psi_final / e2;

    const State theta_final = prop_->run(r.theta0, total_steps(prob));
    const double nth = norm(r.theta0, *ops_);
    r.apriori_lhs = kappa * kappa * r.observation * r.observation + e2 * nth * nth;
    r.apriori_rhs = r.norm_psi0 * norm(theta_final, *ops_);
    r.apriori_ok = r.apriori_lhs <= r.apriori_rhs * (1.0 + 1e-8) + 1e-300;
    r.observation_ok = r.observation <= r.norm_psi0 * (1.0 + 1e-8);

    r.flags.target = r.norm_psi_final <= prob.eps * r.norm_psi0;
    r.flags.cost = r.cost <= r.norm_psi0 * r.norm_psi0 * (1.0 + 1e-8);
    return r;
}

double ControlSolver::verify_duality(ControlResult& result, const ControlProblem& prob,
                                     std::span<const State> zetas) const {
    const std::size_t ks = total_steps(prob) - tau_steps(prob);
    const std::size_t kt = total_steps(prob);
    const double np = norm(prob.psi0, *ops_);
    double worst = 0.0;
    for (const State& z0 : zetas) {
        const State z = prop_->run(z0, ks);
        const State zt = prop_->run(z0, kt);
        const auto zo = restrict_omega(*ops_, z);
        const double res = inner_omega(*ops_, result.h, zo) + inner(prob.psi0, zt, *ops_) -
                           inner(result.psi_final, z0, *ops_);
        const double scale = np * norm(z0, *ops_);
        worst = std::max(worst, scale > 0.0 ? std::abs(res) / scale : std::abs(res));
    }
    result.flags.duality_residual = worst;
    return worst;
}

Calibration ControlSolver::calibrate_kappa(const ControlProblem& prob, double kappa0, int max_doublings) const {
    if (!(kappa0 > 0.0)) throw std::invalid_argument("calibrate_kappa: starting kappa must be positive");
    double kappa = kappa0;
    ControlResult last;
    for (int d = 0; d <= max_doublings; ++d) {
        last = synthesize(prob, kappa);
        if (last.flags.target && last.flags.cost) return {kappa, d, last};
        kappa *= 2.0;
    }
    std::ostringstream os;
    os.precision(6);
    os << "kappa calibration failed after " << max_doublings << " doublings from " << kappa0 << ": last kappa "
       << last.kappa << ", ||Psi(T)||/||Psi0|| = " << (last.norm_psi0 > 0 ? last.norm_psi_final / last.norm_psi0 : 0.0)
       << ", cost/||Psi0||^2 = " << (last.norm_psi0 > 0 ? last.cost / (last.norm_psi0 * last.norm_psi0) : 0.0)
       << " (grid may be too coarse)";
    throw CalibrationError(os.str());
}

double kappa_seed(const CostConstants& c, double horizon, double eps) {
    if (!(horizon > 0.0) || !(eps > 0.0)) throw std::invalid_argument("kappa_seed needs positive horizon and eps");
    return c.m1 * std::exp(c.m2 / horizon) / std::pow(eps, c.delta);
}

CostStudy cost_study(const ControlSolver& solver, const ControlProblem& tmpl, std::vector<double> eps_list,
                     std::span<const State> members, const std::optional<CostConstants>& fitted, int max_doublings) {
    if (eps_list.size() < 4) throw std::invalid_argument("cost study needs at least 4 eps values");
    std::sort(eps_list.begin(), eps_list.end(), std::greater<>());
    if (!(eps_list.back() > 0.0)) throw std::invalid_argument("cost study eps values must be positive");
    if (eps_list.front() / eps_list.back() < 10.0 - 1e-12)
        throw std::invalid_argument("cost study eps values must span at least one decade");
    if (members.empty()) throw std::invalid_argument("cost study needs at least one initial state");
    CostStudy out;
    if (fitted) out.fitted_delta = fitted->delta;
    std::vector<double> prev_kappa(members.size(), 0.0);
    std::vector<State> free_finals;
    for (const State& m : members) {
        ControlProblem p = tmpl;
        p.psi0 = m;
        free_finals.push_back(solver.free_final(p));
    }
    for (double eps : eps_list) {
        CostRow row;
        row.eps = eps;
        row.passes = true;
        for (std::size_t j = 0; j < members.size(); ++j) {
            ControlProblem p = tmpl;
            p.psi0 = members[j];
            p.eps = eps;
            const double n0 = norm(p.psi0, solver.ops());
            if (norm(free_finals[j], solver.ops()) <= eps * n0) {
                ++row.free_members;
                continue;
            }
            const double seed = fitted ? kappa_seed(*fitted, p.T - p.tau, eps) : 1.0;
            try {
                const Calibration c = solver.calibrate_kappa(p, std::max(seed, prev_kappa[j]), max_doublings);
                prev_kappa[j] = c.kappa;
                row.sup_cost = std::max(row.sup_cost, c.result.norm_h);
                row.kappa = std::max(row.kappa, c.kappa);
                row.passes = row.passes && c.result.flags.target && c.result.flags.cost;
            } catch (const std::exception& e) {
                row.passes = false;
                out.rows.push_back(row);
                out.failure = e.what();
                return out;
            }
        }
        out.rows.push_back(row);
    }
    std::vector<double> xs, ys;
    for (const auto& r : out.rows)
        if (r.sup_cost > 0.0) {
            xs.push_back(std::log(1.0 / r.eps));
            ys.push_back(std::log(r.sup_cost));
        }
    if (xs.size() >= 2) {
        double mx = 0.0, my = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            mx += xs[i] / xs.size();
            my += ys[i] / xs.size();
        }
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            sxy += (xs[i] - mx) * (ys[i] - my);
            sxx += (xs[i] - mx) * (xs[i] - mx);
        }
        if (sxx > 0.0) out.slope = sxy / sxx;
    }
    out.complete = true;
    return out;
}

}  // namespace dynbc
