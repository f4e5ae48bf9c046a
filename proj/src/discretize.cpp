#include "dynbc/discretize.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace dynbc {

namespace {

void build_interval(const DomainSpec& d, Resolution res, Grid& g, std::vector<Edge>& edges) {
    if (res.n < 2) throw std::invalid_argument("grid.n must be at least 2 (three nodes)");
    const int n = res.n;
    const double dx = (d.b() - d.a()) / n;
    g.dr = dx;
    g.n_interior = static_cast<std::size_t>(n - 1);
    g.n_boundary = 2;
    g.nodes.resize(n + 1);
    g.w_bulk.assign(n + 1, dx);
    g.w_trace.assign(n + 1, 0.0);
    // node i in 1..n-1 -> dof i-1; x=a -> n-1; x=b -> n
    auto dof = [n](int i) -> std::size_t {
        if (i == 0) return static_cast<std::size_t>(n - 1);
        if (i == n) return static_cast<std::size_t>(n);
        return static_cast<std::size_t>(i - 1);
    };
    for (int i = 0; i <= n; ++i) g.nodes[dof(i)] = {d.a() + i * dx, 0.0};
    g.nodes[dof(n)] = {d.b(), 0.0};
    for (int e : {0, n}) {
        g.w_bulk[dof(e)] = 0.5 * dx;
        g.w_trace[dof(e)] = 1.0;
    }
    g.normals = {{-1.0, 0.0}, {1.0, 0.0}};
    for (int i = 0; i < n; ++i) edges.push_back({dof(i), dof(i + 1), 1.0 / dx});
}

void build_disk(const DomainSpec& d, Resolution res, Grid& g, std::vector<Edge>& edges) {
    if (res.nr < 2 || res.ntheta < 3)
        throw std::invalid_argument("disk grid needs grid.nr >= 2 and grid.ntheta >= 3");
    const int nr = res.nr, nt = res.ntheta;
    const double R = d.radius();
    const double dth = 2.0 * std::numbers::pi / nt;
    const double dr = R / (nr + 0.5);
    g.dr = dr;
    g.n_interior = static_cast<std::size_t>(nr) * nt;
    g.n_boundary = static_cast<std::size_t>(nt);
    const std::size_t total = g.n_interior + g.n_boundary;
    g.nodes.resize(total);
    g.w_bulk.assign(total, 0.0);
    g.w_trace.assign(total, 0.0);
    g.normals.resize(nt);
    auto idx = [nt](int i, int j) { return static_cast<std::size_t>(i) * nt + ((j % nt + nt) % nt); };
    const Point c = d.center();
    for (int i = 0; i < nr; ++i) {
        const double r = (i + 0.5) * dr;
        for (int j = 0; j < nt; ++j) {
            const double th = j * dth;
            g.nodes[idx(i, j)] = {c.x + r * std::cos(th), c.y + r * std::sin(th)};
            g.w_bulk[idx(i, j)] = r * dr * dth;
        }
    }
    const double r_in = nr * dr;  // inner edge of the ring cell
    for (int j = 0; j < nt; ++j) {
        const double th = j * dth;
        const std::size_t k = idx(nr, j);
        g.nodes[k] = {c.x + R * std::cos(th), c.y + R * std::sin(th)};
        g.w_bulk[k] = 0.5 * (R * R - r_in * r_in) * dth;
        g.w_trace[k] = R * dth;
        g.normals[j] = {std::cos(th), std::sin(th)};
    }
    for (int i = 0; i < nr; ++i) {
        const double r = (i + 0.5) * dr;
        for (int j = 0; j < nt; ++j) {
            edges.push_back({idx(i, j), idx(i + 1, j), (i + 1) * dth});
            edges.push_back({idx(i, j), idx(i, j + 1), dr / (r * dth)});
        }
    }
    // ring: half cell in the bulk plus the Laplace-Beltrami term on the circle
    const double ring_kappa = 0.5 * dr / ((R - 0.25 * dr) * dth) + 1.0 / (R * dth);
    for (int j = 0; j < nt; ++j) edges.push_back({idx(nr, j), idx(nr, j + 1), ring_kappa});
}

}  // namespace

Discretization assemble(const DomainSpec& domain, Resolution res) {
    Discretization out;
    Grid& g = out.grid;
    g.kind = domain.kind();
    g.res = res;
    std::vector<Edge> edges;
    if (domain.kind() == DomainKind::interval)
        build_interval(domain, res, g, edges);
    else
        build_disk(domain, res, g, edges);

    OperatorSet& ops = out.ops;
    const std::size_t n = g.size();
    ops.mass.resize(n);
    ops.inv_mass.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        ops.mass[k] = g.w_bulk[k] + g.w_trace[k];
        if (!(g.w_bulk[k] > 0.0) || g.w_trace[k] < 0.0 || (g.is_boundary(k) && !(g.w_trace[k] > 0.0)))
            throw std::logic_error("assembly produced a non-positive quadrature weight");
        ops.inv_mass[k] = 1.0 / ops.mass[k];
    }
    std::vector<Triplet> trip;
    trip.reserve(4 * edges.size());
    for (const Edge& e : edges) {
        trip.push_back({e.i, e.i, e.kappa});
        trip.push_back({e.j, e.j, e.kappa});
        trip.push_back({e.i, e.j, -e.kappa});
        trip.push_back({e.j, e.i, -e.kappa});
    }
    ops.stiffness = csr_from_triplets(n, std::move(trip));
    ops.edges = std::move(edges);

    for (std::size_t k = 0; k < n; ++k) {
        if (domain.in_omega(g.nodes[k])) {
            if (g.is_boundary(k)) throw std::logic_error("omega contains a boundary node");
            ops.omega_nodes.push_back(k);
            ops.omega_weights.push_back(g.w_bulk[k]);
        }
    }
    if (ops.omega_nodes.empty()) throw std::invalid_argument("omega contains no grid nodes; refine the grid");
    return out;
}

void OperatorSet::apply(std::span<const double> u, std::span<double> out) const {
    kernels::spmv(stiffness, u, out);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] *= -inv_mass[k];
}

State OperatorSet::apply(const State& u) const {
    State out(u.size());
    apply(std::span<const double>(u), std::span<double>(out));
    return out;
}

double inner(const State& u, const State& v, const OperatorSet& ops) {
    if (u.size() != ops.size() || v.size() != ops.size()) throw std::invalid_argument("inner: state size mismatch");
    return kernels::wdot(ops.mass, u, v);
}

double norm(const State& u, const OperatorSet& ops) { return std::sqrt(inner(u, u, ops)); }

double energy(const State& u, const OperatorSet& ops) {
    if (u.size() != ops.size()) throw std::invalid_argument("energy: state size mismatch");
    std::vector<double> ku(u.size());
    kernels::spmv(ops.stiffness, u, ku);
    return kernels::dot(u, ku);
}

std::span<const double> bulk(const State& u) { return {u.data(), u.size()}; }

std::span<const double> trace(const State& u, const Grid& grid) {
    if (u.size() != grid.size()) throw std::invalid_argument("trace: state size mismatch");
    return {u.data() + grid.trace_offset(), grid.n_boundary};
}

std::vector<double> restrict_omega(const OperatorSet& ops, const State& u) {
    if (u.size() != ops.size()) throw std::invalid_argument("restrict_omega: state size mismatch");
    std::vector<double> v(ops.omega_nodes.size());
    for (std::size_t q = 0; q < v.size(); ++q) v[q] = u[ops.omega_nodes[q]];
    return v;
}

State embed_omega(const OperatorSet& ops, std::span<const double> v) {
    if (v.size() != ops.omega_nodes.size()) throw std::invalid_argument("embed_omega: payload size mismatch");
    State u(ops.size(), 0.0);
    for (std::size_t q = 0; q < v.size(); ++q) u[ops.omega_nodes[q]] = v[q];
    return u;
}

double inner_omega(const OperatorSet& ops, std::span<const double> v, std::span<const double> w) {
    if (v.size() != ops.omega_nodes.size() || w.size() != v.size())
        throw std::invalid_argument("inner_omega: size mismatch");
    return kernels::wdot(ops.omega_weights, v, w);
}

double norm_omega(const OperatorSet& ops, std::span<const double> v) { return std::sqrt(inner_omega(ops, v, v)); }

double observe_norm(const OperatorSet& ops, const State& u) {
    const auto v = restrict_omega(ops, u);
    return norm_omega(ops, v);
}

void write_operator_coo(const OperatorSet& ops, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    const CsrMatrix& k = ops.stiffness;
    char buf[128];
    os << "# row col A_value\n";
    for (std::size_t i = 0; i < k.n; ++i)
        for (std::size_t p = k.row_ptr[i]; p < k.row_ptr[i + 1]; ++p) {
            std::snprintf(buf, sizeof buf, "%zu %zu %.17g\n", i, k.col[p], -k.val[p] * ops.inv_mass[i]);
            os << buf;
        }
}

}  // namespace dynbc
