#include "dynbc/evolve.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

namespace dynbc {

Scheme parse_scheme(const std::string& name) {
    if (name == "crank_nicolson" || name == "cn") return Scheme::crank_nicolson;
    if (name == "backward_euler" || name == "be") return Scheme::backward_euler;
    throw std::invalid_argument("time.scheme: unknown scheme '" + name + "'");
}

std::string scheme_name(Scheme s) { return s == Scheme::crank_nicolson ? "crank_nicolson" : "backward_euler"; }

void Schedule::validate() const {
    if (!(t0 < t1)) throw std::invalid_argument("schedule needs t0 < t1");
    if (!(dt > 0.0)) throw std::invalid_argument("time.dt must be positive");
    const double ratio = (t1 - t0) / dt;
    if (std::abs(ratio - std::round(ratio)) > 1e-8 * std::max(1.0, ratio))
        throw std::invalid_argument("time.dt must divide the time span");
}

std::size_t Schedule::steps() const {
    validate();
    return static_cast<std::size_t>(std::llround((t1 - t0) / dt));
}

struct Propagator::Impl {
    CsrMatrix system;             // M + theta dt K
    std::vector<double> diag_inv;
    double explicit_weight = 0.0;  // (1 - theta) dt
    bool direct = false;
    Eigen::LLT<Eigen::MatrixXd> llt;
};

Propagator::Propagator(const OperatorSet& ops, double dt, Scheme scheme, SolverOptions opts)
    : ops_(&ops), dt_(dt), scheme_(scheme), opts_(opts), impl_(std::make_unique<Impl>()) {
    if (!(dt > 0.0)) throw std::invalid_argument("time.dt must be positive");
    const double theta = scheme == Scheme::crank_nicolson ? 0.5 : 1.0;
    impl_->explicit_weight = (1.0 - theta) * dt;
    const std::size_t n = ops.size();
    std::vector<Triplet> trip;
    const CsrMatrix& k = ops.stiffness;
    for (std::size_t i = 0; i < n; ++i) {
        trip.push_back({i, i, ops.mass[i]});
        for (std::size_t p = k.row_ptr[i]; p < k.row_ptr[i + 1]; ++p) trip.push_back({i, k.col[p], theta * dt * k.val[p]});
    }
    impl_->system = csr_from_triplets(n, std::move(trip));
    impl_->diag_inv.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = impl_->system.row_ptr[i]; p < impl_->system.row_ptr[i + 1]; ++p)
            if (impl_->system.col[p] == i) impl_->diag_inv[i] = 1.0 / impl_->system.val[p];
    if (n <= opts_.direct_limit) {
        Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(n, n);
        const CsrMatrix& s = impl_->system;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t p = s.row_ptr[i]; p < s.row_ptr[i + 1]; ++p) dense(i, s.col[p]) = s.val[p];
        impl_->llt.compute(dense);
        if (impl_->llt.info() != Eigen::Success) throw NumericalError("time-step matrix is not positive definite");
        impl_->direct = true;
    }
}

Propagator::~Propagator() = default;
Propagator::Propagator(Propagator&&) noexcept = default;
Propagator& Propagator::operator=(Propagator&&) noexcept = default;

void Propagator::step(State& u) const {
    const std::size_t n = ops_->size();
    if (u.size() != n) throw std::invalid_argument("propagate: state size mismatch");
    std::vector<double> rhs(n);
    if (impl_->explicit_weight > 0.0) {
        kernels::spmv(ops_->stiffness, u, rhs);
        for (std::size_t i = 0; i < n; ++i) rhs[i] = ops_->mass[i] * u[i] - impl_->explicit_weight * rhs[i];
    } else {
        kernels::hadamard(ops_->mass, u, rhs);
    }
    if (impl_->direct) {
        Eigen::Map<const Eigen::VectorXd> b(rhs.data(), static_cast<Eigen::Index>(n));
        Eigen::Map<Eigen::VectorXd> x(u.data(), static_cast<Eigen::Index>(n));
        x = impl_->llt.solve(b);
        return;
    }
    // Jacobi-preconditioned CG, warm started from the previous state.
    const CsrMatrix& a = impl_->system;
    std::vector<double> r(n), z(n), p(n), q(n);
    kernels::spmv(a, u, q);
    for (std::size_t i = 0; i < n; ++i) r[i] = rhs[i] - q[i];
    const double bnorm = std::sqrt(kernels::dot(rhs, rhs));
    if (bnorm == 0.0) {
        std::fill(u.begin(), u.end(), 0.0);
        return;
    }
    kernels::hadamard(impl_->diag_inv, r, z);
    p = z;
    double rz = kernels::dot(r, z);
    const std::size_t maxit = opts_.max_iter ? opts_.max_iter : 20 * n;
    double rnorm = std::sqrt(kernels::dot(r, r));
    std::size_t it = 0;
    while (rnorm > opts_.rel_tol * bnorm) {
        if (it++ >= maxit) {
            std::ostringstream os;
            os << "time-step CG did not converge: relative residual " << rnorm / bnorm << " after " << maxit
               << " iterations";
            throw NumericalError(os.str());
        }
        kernels::spmv(a, p, q);
        const double pq = kernels::dot(p, q);
        if (!(pq > 0.0)) throw NumericalError("time-step CG breakdown (non-positive curvature)");
        const double alpha = rz / pq;
        kernels::axpy(alpha, p, u);
        kernels::axpy(-alpha, q, r);
        kernels::hadamard(impl_->diag_inv, r, z);
        const double rz_new = kernels::dot(r, z);
        kernels::xpay(z, rz_new / rz, p);
        rz = rz_new;
        rnorm = std::sqrt(kernels::dot(r, r));
    }
}

State Propagator::run(const State& u0, std::size_t nsteps, double t0, const StepObserver& obs) const {
    State u = u0;
    if (obs) obs(0, t0, u);
    for (std::size_t k = 1; k <= nsteps; ++k) {
        step(u);
        if (obs) obs(k, t0 + static_cast<double>(k) * dt_, u);
    }
    return u;
}

std::size_t Propagator::steps_for(double duration) const {
    Schedule s{0.0, duration, dt_, scheme_};
    return s.steps();
}

State propagate(const State& u0, const Schedule& sched, const OperatorSet& ops, const StepObserver& obs) {
    const std::size_t n = sched.steps();
    Propagator prop(ops, sched.dt, sched.scheme);
    return prop.run(u0, n, sched.t0, obs);
}

ImpulsiveRun propagate_impulsive(const State& psi0, const ImpulseEvent& event, double T, const Propagator& prop,
                                 const StepObserver& obs) {
    if (!(event.tau > 0.0 && event.tau < T)) throw std::invalid_argument("impulse.tau must lie in (0, T)");
    const std::size_t total = prop.steps_for(T);
    const auto k_tau = static_cast<std::size_t>(std::llround(event.tau / prop.dt()));
    if (k_tau == 0 || k_tau >= total) throw std::invalid_argument("impulse.tau rounds to an endpoint of (0, T)");
    ImpulsiveRun out;
    out.tau_step = k_tau;
    out.tau_used = static_cast<double>(k_tau) * prop.dt();
    State u = prop.run(psi0, k_tau, 0.0, obs);
    const State kick = embed_omega(prop.ops(), event.payload);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] += kick[i];
    StepObserver shifted;
    if (obs) shifted = [&](std::size_t k, double t, const State& s) {
        if (k > 0) obs(k + k_tau, t, s);
    };
    out.state = prop.run(u, total - k_tau, out.tau_used, shifted);
    return out;
}

ImpulsiveRun propagate_impulsive(const State& psi0, const ImpulseEvent& event, double T, const Schedule& sched,
                                 const OperatorSet& ops) {
    Propagator prop(ops, sched.dt, sched.scheme);
    return propagate_impulsive(psi0, event, T, prop);
}

}  // namespace dynbc
