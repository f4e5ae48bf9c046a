#include <doctest.h>

#include <stdexcept>

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "dynbc/discretize.hpp"

using namespace dynbc;

namespace {

Eigen::MatrixXd dense_stiffness(const OperatorSet& ops) {
    const auto n = static_cast<Eigen::Index>(ops.size());
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
    const CsrMatrix& s = ops.stiffness;
    for (std::size_t i = 0; i < s.n; ++i)
        for (std::size_t p = s.row_ptr[i]; p < s.row_ptr[i + 1]; ++p)
            k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(s.col[p])) = s.val[p];
    return k;
}

Eigen::Map<const Eigen::VectorXd> vec(const std::vector<double>& v) {
    return {v.data(), static_cast<Eigen::Index>(v.size())};
}

State noise(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    State v(n);
    for (double& x : v) x = g(rng);
    return v;
}

std::vector<std::pair<DomainSpec, Resolution>> structure_cases() {
    const auto I = DomainSpec::interval(0.0, 1.0, 0.5, {0.3, 0.7, {}, 0.0});
    const auto D = DomainSpec::disk({0.0, 0.0}, 1.0, {0.0, 0.0}, {0, 0, {0.0, 0.0}, 0.5});
    return {{I, {8, 0, 0}}, {I, {32, 0, 0}}, {I, {128, 0, 0}}, {D, {0, 6, 16}}};
}

}  // namespace

TEST_SUITE("discretize") {
    TEST_CASE("two-cell interval in closed form") {
        const auto d = assemble(DomainSpec::interval(0.0, 1.0, 0.5, {0.25, 0.75, {}, 0.0}), {2, 0, 0});
        REQUIRE(d.grid.size() == 3);
        CHECK(d.grid.n_interior == 1);
        CHECK(d.grid.nodes[0].x == 0.5);
        CHECK(d.grid.nodes[1].x == 0.0);
        CHECK(d.grid.nodes[2].x == 1.0);
        CHECK(d.ops.mass == std::vector<double>{0.5, 1.25, 1.25});
        const Eigen::MatrixXd k = dense_stiffness(d.ops);
        Eigen::Matrix3d expected;
        expected << 4, -2, -2, -2, 2, 0, -2, 0, 2;
        CHECK((k - expected).norm() < 1e-14);
        CHECK(d.ops.omega_nodes == std::vector<std::size_t>{0});
    }

    TEST_CASE("quadrature weights integrate constants exactly") {
        for (const auto& [dom, res] : structure_cases()) {
            const auto d = assemble(dom, res);
            double vol = 0, surf = 0;
            for (std::size_t k = 0; k < d.grid.size(); ++k) {
                vol += d.grid.w_bulk[k];
                surf += d.grid.w_trace[k];
                CHECK(d.ops.mass[k] > 0.0);
            }
            CHECK(vol == doctest::Approx(dom.measure()).epsilon(1e-13));
            CHECK(surf == doctest::Approx(dom.boundary_measure()).epsilon(1e-13));
        }
    }

    TEST_CASE("generator is self-adjoint, dissipative and kills constants") {
        std::mt19937_64 rng(11);
        for (const auto& [dom, res] : structure_cases()) {
            const auto d = assemble(dom, res);
            const auto& ops = d.ops;
            for (int k = 0; k < 20; ++k) {
                const State u = noise(ops.size(), rng), v = noise(ops.size(), rng);
                const double lhs = inner(ops.apply(u), v, ops), rhs = inner(u, ops.apply(v), ops);
                CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(std::abs(lhs), 1.0) * 10);
            }
            for (int k = 0; k < 100; ++k) {
                const State u = noise(ops.size(), rng);
                CHECK(inner(ops.apply(u), u, ops) <= 1e-12 * inner(u, u, ops));
            }
            const State one(ops.size(), 1.0);
            CHECK(norm(ops.apply(one), ops) <= 1e-12 * norm(one, ops));
        }
    }

    TEST_CASE("dense eigenvalue oracle: one zero mode, the rest negative") {
        for (const auto& [dom, res] : structure_cases()) {
            const auto d = assemble(dom, res);
            if (d.ops.size() > 200) continue;
            const Eigen::MatrixXd k = dense_stiffness(d.ops);
            CHECK((k - k.transpose()).norm() <= 1e-12 * k.norm());
            const Eigen::MatrixXd m = vec(d.ops.mass).asDiagonal();
            Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(k, m);
            REQUIRE(es.info() == Eigen::Success);
            const Eigen::VectorXd lam = es.eigenvalues();
            CHECK(std::abs(lam[0]) < 1e-10 * lam[lam.size() - 1]);
            CHECK(lam[1] > 1e-8);
            // energy is the quadratic form of K
            std::mt19937_64 rng(2);
            const State u = noise(d.ops.size(), rng);
            CHECK(energy(u, d.ops) == doctest::Approx(vec(u).dot(k * vec(u))).epsilon(1e-12));
        }
    }

    TEST_CASE("interval generator converges at second order on a compatible field") {
        // u = g + c1 x + c2 x^2 with u'' + du/dnu = 0 at both ends, so the
        // lumped boundary rows are second-order accurate.
        auto g = [](double x) { return std::cos(2 * x) + x * x * x; };
        auto g1 = [](double x) { return -2 * std::sin(2 * x) + 3 * x * x; };
        auto g2 = [](double x) { return -4 * std::cos(2 * x) + 6 * x; };
        const double c2 = (g1(0) - g2(0) - g2(1) - g1(1)) / 6.0;
        const double c1 = 2 * c2 - g1(0) + g2(0);
        auto u = [&](double x) { return g(x) + c1 * x + c2 * x * x; };
        auto du = [&](double x) { return g1(x) + c1 + 2 * c2 * x; };
        auto d2u = [&](double x) { return g2(x) + 2 * c2; };
        CHECK(d2u(0) - du(0) == doctest::Approx(0.0).scale(1.0));
        CHECK(d2u(1) + du(1) == doctest::Approx(0.0).scale(1.0));
        const auto dom = DomainSpec::interval(0.0, 1.0, 0.5, {0.3, 0.7, {}, 0.0});
        double prev = 0;
        for (int n : {16, 32, 64, 128}) {
            const auto d = assemble(dom, {n, 0, 0});
            const State uh = sample(d.grid, [&](Point p) { return u(p.x); });
            const State au = d.ops.apply(uh);
            double err = 0;
            for (std::size_t k = 0; k < d.grid.size(); ++k) {
                const double x = d.grid.nodes[k].x;
                double exact = d2u(x);
                if (d.grid.is_boundary(k)) exact = x == 0.0 ? du(0) : -du(1);
                err = std::max(err, std::abs(au[k] - exact));
            }
            if (prev > 0) CHECK(std::log2(prev / err) >= 1.9);
            prev = err;
        }
    }

    TEST_CASE("observation restriction and extension are adjoint") {
        std::mt19937_64 rng(5);
        for (const auto& [dom, res] : structure_cases()) {
            const auto d = assemble(dom, res);
            for (int k = 0; k < 10; ++k) {
                const State u = noise(d.ops.size(), rng);
                const State v = noise(d.ops.omega_nodes.size(), rng);
                const double lhs = inner_omega(d.ops, restrict_omega(d.ops, u), v);
                const double rhs = inner(u, embed_omega(d.ops, v), d.ops);
                CHECK(std::abs(lhs - rhs) <= 1e-14 * std::max(1.0, std::abs(lhs)) * 10);
            }
            for (std::size_t q : d.ops.omega_nodes) CHECK(dom.in_omega(d.grid.nodes[q]));
        }
    }

    TEST_CASE("bulk and trace views") {
        const auto d = assemble(DomainSpec::interval(0.0, 1.0, 0.5, {0.3, 0.7, {}, 0.0}), {4, 0, 0});
        State u{1, 2, 3, 4, 5};
        CHECK(trace(u, d.grid).size() == 2);
        CHECK(trace(u, d.grid)[0] == 4);
        CHECK_THROWS(trace(State{1, 2}, d.grid));
    }

    TEST_CASE("invalid grids are rejected") {
        const auto I = DomainSpec::interval(0.0, 1.0, 0.5, {0.3, 0.7, {}, 0.0});
        CHECK_THROWS_AS(assemble(I, {1, 0, 0}), std::invalid_argument);
        const auto narrow = DomainSpec::interval(0.0, 1.0, 0.415, {0.41, 0.42, {}, 0.0});
        CHECK_THROWS_AS(assemble(narrow, {4, 0, 0}), std::invalid_argument);
        const auto D = DomainSpec::disk({0, 0}, 1.0, {0, 0}, {0, 0, {0, 0}, 0.5});
        CHECK_THROWS_AS(assemble(D, {0, 1, 16}), std::invalid_argument);
        CHECK_THROWS_AS(assemble(D, {0, 4, 2}), std::invalid_argument);
    }

    TEST_CASE("operator export") {
        const auto d = assemble(DomainSpec::interval(0.0, 1.0, 0.5, {0.3, 0.7, {}, 0.0}), {4, 0, 0});
        const auto path = std::filesystem::temp_directory_path() / "dynbc_coo_test.txt";
        write_operator_coo(d.ops, path.string());
        std::ifstream in(path);
        std::string line;
        int lines = 0;
        while (std::getline(in, line)) ++lines;
        CHECK(lines >= static_cast<int>(d.ops.stiffness.nnz()));
        std::filesystem::remove(path);
    }
}
