#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dynbc/discretize.hpp"
#include "dynbc/evolve.hpp"
#include "dynbc/logconvexity.hpp"

namespace dynbc {

struct ControlProblem {
    State psi0;
    double tau = 0.5;
    double T = 1.0;
    double eps = 0.1;
    std::optional<double> kappa;  // empty: calibrate
    double cg_tol = 1e-12;
    std::size_t cg_maxit = 2000;

    void validate(std::size_t n) const;
};

struct DualSolution {
    State theta0;
    double residual = 0.0;  // true relative residual in the mass norm
    std::size_t iterations = 0;
};

struct ControlFlags {
    bool target = false;  // ||Psi(T)|| <= eps ||Psi0||
    bool cost = false;    // ||h||^2/kappa^2 + ||Psi(T)||^2/eps^2 <= ||Psi0||^2 (1 + 1e-8)
    std::optional<double> duality_residual;
};

struct ControlResult {
    std::vector<double> h;  // on omega nodes
    State theta0;
    State psi_final;
    double kappa = 0.0;
    double eps = 0.0;
    double tau_used = 0.0;
    double residual_el = 0.0;
    std::size_t cg_iterations = 0;
    double norm_h = 0.0;
    double norm_psi0 = 0.0;
    double norm_psi_final = 0.0;
    double terminal_mismatch = 0.0;  // ||Psi(T) + eps^2 theta0|| / ||Psi0||
    double cost = 0.0;               // ||h||^2/kappa^2 + ||Psi(T)||^2/eps^2
    double apriori_lhs = 0.0;        // kappa^2 ||v(T-tau)||_omega^2 + eps^2 ||theta0||^2
    double apriori_rhs = 0.0;        // ||Psi0|| ||theta(T)||
    bool apriori_ok = false;
    double observation = 0.0;        // ||v(T-tau)||_omega
    bool observation_ok = false;     // observation <= ||Psi0||
    ControlFlags flags;
};

class ConvergenceError : public NumericalError {
public:
    ConvergenceError(const std::string& what, double residual, std::size_t iterations)
        : NumericalError(what), residual_(residual), iterations_(iterations) {}
    double residual() const { return residual_; }
    std::size_t iterations() const { return iterations_; }

private:
    double residual_;
    std::size_t iterations_;
};

class CalibrationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Calibration {
    double kappa = 0.0;
    int doublings = 0;
    ControlResult result;
};

// Matrix-free HUM machinery on one discretization and time step.
class ControlSolver {
public:
    ControlSolver(const OperatorSet& ops, const Propagator& prop) : ops_(&ops), prop_(&prop) {}

    // kappa^2 e^{(T-tau)A} E R e^{(T-tau)A} zeta0 + eps^2 zeta0
    State gramian_apply(const State& zeta0, const ControlProblem& prob, double kappa) const;
    // CG in the mass inner product for G theta0 = -e^{TA} Psi0.
    DualSolution solve_dual(const ControlProblem& prob, double kappa) const;
    ControlResult synthesize(const ControlProblem& prob, double kappa) const;
    // Max over samples of |<h, z(T-tau)>_omega + <Psi0, zeta(T)> - <Psi(T), zeta0>| / (||Psi0|| ||zeta0||).
    double verify_duality(ControlResult& result, const ControlProblem& prob, std::span<const State> zetas) const;
    // Doubles kappa from kappa0 until both certification flags hold.
    Calibration calibrate_kappa(const ControlProblem& prob, double kappa0, int max_doublings = 40) const;
    // Free evolution e^{TA} Psi0.
    State free_final(const ControlProblem& prob) const;

    const OperatorSet& ops() const { return *ops_; }
    const Propagator& propagator() const { return *prop_; }

private:
    std::size_t total_steps(const ControlProblem& prob) const;
    std::size_t tau_steps(const ControlProblem& prob) const;

    const OperatorSet* ops_;
    const Propagator* prop_;
};

// M1 e^{M2/horizon} / eps^delta
double kappa_seed(const CostConstants& c, double horizon, double eps);

struct CostRow {
    double eps = 0.0;
    double sup_cost = 0.0;  // sup over members of ||h||
    double kappa = 0.0;     // largest kappa used; 0 when no member needed control
    bool passes = false;
    std::size_t free_members = 0;  // members meeting the target without control
};

struct CostStudy {
    std::vector<CostRow> rows;
    std::optional<double> slope;         // d log sup_cost / d log (1/eps)
    std::optional<double> fitted_delta;
    bool complete = false;
    std::string failure;
};

// Sweeps eps from large to small; each member's kappa search starts from
// max(seed, kappa used at the previous eps).
CostStudy cost_study(const ControlSolver& solver, const ControlProblem& tmpl, std::vector<double> eps_list,
                     std::span<const State> members, const std::optional<CostConstants>& fitted,
                     int max_doublings = 40);

}  // namespace dynbc
