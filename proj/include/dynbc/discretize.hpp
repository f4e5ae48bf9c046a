#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dynbc/geometry.hpp"
#include "dynbc/kernels.hpp"

namespace dynbc {

// A state holds one value per degree of freedom. Interior nodes come first,
// boundary nodes last. The bulk field covers every node; the trace is the
// tail block, so u_Gamma = u|_Gamma holds by construction.
using State = std::vector<double>;

struct Resolution {
    int n = 0;       // interval cells
    int nr = 0;      // disk: radial interior nodes
    int ntheta = 0;  // disk: angular nodes
};

struct Grid {
    DomainKind kind = DomainKind::interval;
    Resolution res{};
    std::size_t n_interior = 0;
    std::size_t n_boundary = 0;
    std::vector<Point> nodes;
    std::vector<double> w_bulk;   // quadrature weight of the bulk integral
    std::vector<double> w_trace;  // zero at interior nodes
    std::vector<Point> normals;   // outward normal, boundary nodes only (indexed from 0)
    double dr = 0.0;              // disk radial spacing, interval cell width

    std::size_t size() const { return nodes.size(); }
    std::size_t trace_offset() const { return n_interior; }
    bool is_boundary(std::size_t k) const { return k >= n_interior; }
};

struct Edge {
    std::size_t i;
    std::size_t j;
    double kappa;
};

struct OperatorSet {
    std::vector<Edge> edges;
    CsrMatrix stiffness;             // K: <-AU, V> = V^T K U
    std::vector<double> mass;        // lumped, w_bulk + w_trace
    std::vector<double> inv_mass;
    std::vector<std::size_t> omega_nodes;
    std::vector<double> omega_weights;

    std::size_t size() const { return mass.size(); }
    // out = A u = -M^{-1} K u
    void apply(std::span<const double> u, std::span<double> out) const;
    State apply(const State& u) const;
};

struct Discretization {
    Grid grid;
    OperatorSet ops;
};

Discretization assemble(const DomainSpec& domain, Resolution res);

double inner(const State& u, const State& v, const OperatorSet& ops);
double norm(const State& u, const OperatorSet& ops);
// Dirichlet energy <-AU, U>.
double energy(const State& u, const OperatorSet& ops);

std::span<const double> bulk(const State& u);
std::span<const double> trace(const State& u, const Grid& grid);

std::vector<double> restrict_omega(const OperatorSet& ops, const State& u);
State embed_omega(const OperatorSet& ops, std::span<const double> v);
double inner_omega(const OperatorSet& ops, std::span<const double> v, std::span<const double> w);
double norm_omega(const OperatorSet& ops, std::span<const double> v);
// ||u||_{L2(omega)} of a full state.
double observe_norm(const OperatorSet& ops, const State& u);

// Nodal values of a function.
template <class F>
State sample(const Grid& grid, F&& f) {
    State u(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) u[k] = f(grid.nodes[k]);
    return u;
}

void write_operator_coo(const OperatorSet& ops, const std::string& path);

}  // namespace dynbc
