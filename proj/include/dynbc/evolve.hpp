#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "dynbc/discretize.hpp"

namespace dynbc {

enum class Scheme { crank_nicolson, backward_euler };

Scheme parse_scheme(const std::string& name);
std::string scheme_name(Scheme s);

struct Schedule {
    double t0 = 0.0;
    double t1 = 1.0;
    double dt = 1e-2;
    Scheme scheme = Scheme::crank_nicolson;

    void validate() const;
    std::size_t steps() const;
};

struct ImpulseEvent {
    double tau = 0.0;
    std::vector<double> payload;  // one value per omega node
};

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Called after every completed step (and once at t0 with k = 0).
using StepObserver = std::function<void(std::size_t k, double t, const State& u)>;

struct SolverOptions {
    double rel_tol = 1e-12;
    std::size_t direct_limit = 400;  // dense Cholesky at or below this many unknowns
    std::size_t max_iter = 0;        // 0: 20 * n
};

// One-step map for a fixed (operator, dt, scheme). Reused across calls;
// const methods are safe to call from several threads.
class Propagator {
public:
    Propagator(const OperatorSet& ops, double dt, Scheme scheme, SolverOptions opts = {});
    ~Propagator();
    Propagator(Propagator&&) noexcept;
    Propagator& operator=(Propagator&&) noexcept;

    void step(State& u) const;
    // Advances through `nsteps` steps starting at time t0.
    State run(const State& u0, std::size_t nsteps, double t0 = 0.0, const StepObserver& obs = {}) const;
    // Number of steps covering a duration; throws if dt does not divide it.
    std::size_t steps_for(double duration) const;

    double dt() const { return dt_; }
    Scheme scheme() const { return scheme_; }
    const OperatorSet& ops() const { return *ops_; }

private:
    struct Impl;
    const OperatorSet* ops_;
    double dt_;
    Scheme scheme_;
    SolverOptions opts_;
    std::unique_ptr<Impl> impl_;
};

State propagate(const State& u0, const Schedule& sched, const OperatorSet& ops, const StepObserver& obs = {});

struct ImpulsiveRun {
    State state;
    double tau_used = 0.0;
    std::size_t tau_step = 0;
};

// Mild solution: propagate to tau, add the embedded payload, propagate to T.
ImpulsiveRun propagate_impulsive(const State& psi0, const ImpulseEvent& event, double T, const Propagator& prop,
                                 const StepObserver& obs = {});
ImpulsiveRun propagate_impulsive(const State& psi0, const ImpulseEvent& event, double T, const Schedule& sched,
                                 const OperatorSet& ops);

}  // namespace dynbc
