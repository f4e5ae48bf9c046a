#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dynbc/discretize.hpp"
#include "dynbc/evolve.hpp"
#include "dynbc/geometry.hpp"

namespace dynbc {

// Everything the weighted machinery needs about one configuration.
struct WeightSetting {
    const Discretization* disc = nullptr;
    DomainSpec domain;
    WeightParams params;
    std::vector<double> phi;  // phi at every node

    WeightSetting(const Discretization& d, const DomainSpec& dom, const WeightParams& p);
    const Grid& grid() const { return disc->grid; }
    const OperatorSet& ops() const { return disc->ops; }
    // Phi at every node; t may sit slightly outside [0, T] for differencing.
    std::vector<double> big_phi_nodes(double t) const;
};

// F = U exp(Phi/2) and its inverse.
State weighted_transform(const State& u, double t, const WeightSetting& ws);
State inverse_weighted_transform(const State& f, double t, const WeightSetting& ws);

// Splitting of P1 = 1/2 dPhi/dt + E A E^{-1} into parts that are symmetric
// (S) and antisymmetric (Aanti) in the mass inner product. Only the
// mass-scaled forms MS and B = M Aanti are stored; both are sparse on the
// edge graph of the stiffness matrix.
class WeightedOperators {
public:
    WeightedOperators(const WeightSetting& ws, double t);

    double time() const { return t_; }
    double time_scale() const { return ups_; }
    const WeightSetting& setting() const { return *ws_; }

    void apply_ms(std::span<const double> x, std::span<double> y) const;   // y = M S x
    void apply_b(std::span<const double> x, std::span<double> y) const;    // y = M Aanti x
    void apply_dms(std::span<const double> x, std::span<double> y) const;  // y = d/dt (M S) x
    State apply_s(const State& x) const;
    State apply_anti(const State& x) const;
    State apply_p1(const State& x) const;  // direct evaluation, independent of the splitting

    double quad_s(const State& f) const;            // <S F, F>
    double commutator_form(const State& f) const;   // <-S'F,F> - 2<SF, Aanti F>
    // Symmetric matrix of commutator_form in plain coordinates.
    void apply_commutator(std::span<const double> x, std::span<double> y) const;

    const std::vector<double>& eta() const { return eta_; }
    const std::vector<double>& theta_w() const { return theta_w_; }

private:
    struct EdgeTerms {
        std::vector<double> cosh_k;  // kappa cosh(d_ij)
        std::vector<double> sinh_k;  // kappa sinh(d_ij)
        std::vector<double> diag;    // 1/2 m dPhi/dt - sum kappa
    };
    static EdgeTerms edge_terms(const WeightSetting& ws, double t);
    static EdgeTerms rate_terms(const WeightSetting& ws, double t, double dt);
    void apply_terms(const EdgeTerms& e, std::span<const double> x, std::span<double> y) const;

    const WeightSetting* ws_;
    double t_;
    double ups_;
    double dts_;
    EdgeTerms now_, rate_;  // terms at t and their time derivative
    std::vector<double> half_dphi_;
    std::vector<double> eta_, theta_w_;
};

WeightedOperators build_weighted_operators(double t, const WeightSetting& ws);

// Rayleigh quotient <-S F, F>/||F||^2; throws on F = 0.
double frequency(const State& f, const WeightedOperators& wops);

struct FrequencyTrace {
    std::vector<double> t;
    std::vector<double> norm_f2;
    std::vector<double> neg_s;     // <-S F, F>
    std::vector<double> freq;      // N(t)
    std::vector<double> q;         // commutator form
    std::vector<double> bound;     // (1+C0)/time_scale <-SF,F> + C/h^2 ||F||^2
    std::vector<double> energy_residual;  // |1/2 d/dt ||F||^2 + N ||F||^2|, central differences
    std::vector<double> dfreq;     // dN/dt, central differences
    double c0 = 0.0;
    double c_commutator = 0.0;     // smallest C with Q <= bound along the trace
    double c_frequency = 0.0;      // smallest C with dN/dt <= (1+C0)/time_scale N + C/h^2
    double c = 0.0;                // constant used in `bound`
    double max_energy_residual = 0.0;
    std::vector<State> f;          // weighted states, only when requested
};

class DegenerateDataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Propagates u0 over [0, T] with the given propagator and records the trace.
FrequencyTrace run_trace(const State& u0, const WeightSetting& ws, const Propagator& prop, bool keep_states = false);

// Recomputes the bound column for a new constant.
void set_trace_constant(FrequencyTrace& tr, double c, const WeightSetting& ws);

// Largest h^2 (Q - (1+C0)/time_scale <-SF,F>)/||F||^2 over the span of the
// training states at each recorded time, and over the traces themselves.
double fit_commutator_constant(std::span<const FrequencyTrace> training, const WeightSetting& ws);

// Counts recorded times where Q exceeds the bound by more than the slack.
std::size_t count_bound_violations(const FrequencyTrace& tr, double c, const WeightSetting& ws,
                                   double rel_slack = 1e-8);

struct InterpolationResult {
    double m = 0.0;
    double d = 0.0;
    double lhs = 0.0;  // (1+M) log ||F(t2)||^2
    double rhs = 0.0;  // M log ||F(t1)||^2 + log ||F(t3)||^2 + D
    bool pass = false;
};

// Ratio of integrals of time_scale^-(1+C0) over [t2,t3] and [t1,t2].
double interpolation_exponent(double t1, double t2, double t3, double c0, const WeightParams& p);

InterpolationResult interpolation_check(const FrequencyTrace& tr, std::size_t i1, std::size_t i2, std::size_t i3,
                                        double c, const WeightParams& p, double rel_slack = 1e-8);

// Observation data of one ensemble member at one observation time.
struct ObservationSample {
    double norm_final = 0.0;    // ||U(T)||
    double norm_omega = 0.0;    // ||u(T)||_{L2(omega)}
    double norm_initial = 0.0;  // ||U(0)||
};

struct ObservabilitySet {
    double time = 0.0;
    std::vector<ObservationSample> samples;
};

struct ObservabilityFit {
    bool ok = false;
    std::string failure;
    double beta = 0.0;
    double log_lambda = 0.0;  // log(mu e^{K/T}) at the main time
    double mu = 0.0;
    double k = 0.0;
    double k1 = 0.0;
    double k2 = 0.0;
    double m1 = 0.0;
    double m2 = 0.0;
    double delta = 0.0;
    std::size_t holdout_size = 0;
    std::size_t holdout_violations = 0;
    double worst_training_slack = 0.0;
};

struct CostConstants {
    double m1 = 0.0;
    double m2 = 0.0;
    double delta = 0.0;
};

// Young's inequality step turning (K1, K2, beta) into (M1, M2, delta).
CostConstants cost_constants(double beta, double k1, double k2);

// sets[0] is the main observation time used for beta; the remaining times
// only separate mu from K. The holdout is evaluated at the main time.
ObservabilityFit fit_observability_constants(std::span<const ObservabilitySet> training,
                                             std::span<const ObservationSample> holdout);

ObservationSample observe_sample(const State& u0, const State& u_final, const OperatorSet& ops);

double multiplier_m(double c0, double ell);            // M_ell
double multiplier_d(double c, double c0, double ell);  // D_ell = 2 C ell^2 (1 + M_ell)

struct SignConditionReport {
    double min_phi = 0.0;
    double max_phi_outside = 0.0;
    double value = 0.0;  // -(1+M_ell)/(1+ell) min phi + max_{Omega \ omega} phi
    bool holds = false;
};

SignConditionReport sign_condition(const WeightSetting& ws, double ell);

struct LogConvexityConstants {
    double c0 = 0.0;
    double c = 0.0;
    double ell = 4.0;
    std::optional<double> m_ell;
    std::optional<double> d_ell;
    SignConditionReport sign{};
    ObservabilityFit fit{};
};

// ---- commutator identity ----

struct ManufacturedField {
    std::function<double(Point)> value;
    std::function<Point(Point)> grad;
};

// Smooth field on an interval satisfying the boundary compatibility of the
// weighted generator at time t, so that the discrete form converges at
// second order.
ManufacturedField compatible_interval_field(const DomainSpec& domain, const WeightParams& p, double t);
// exp(-2 r^2) + 0.3 about the disk center.
ManufacturedField radial_bump_field(const DomainSpec& domain);
// Picks one of the two above.
ManufacturedField default_manufactured_field(const DomainSpec& domain, const WeightParams& p, double t);

// Closed-form right side evaluated by Gauss-Legendre quadrature.
double commutator_rhs(const ManufacturedField& f, const DomainSpec& domain, const WeightParams& p, double t);

struct CommutatorRow {
    Resolution res{};
    std::size_t dofs = 0;
    double lhs = 0.0;
    double rhs = 0.0;
    double rel_residual = 0.0;
    std::optional<double> order;
};

std::vector<CommutatorRow> commutator_identity_check(const ManufacturedField& f, const DomainSpec& domain,
                                                     const WeightParams& p, double t,
                                                     std::span<const Resolution> resolutions);

}  // namespace dynbc
