#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <numbers>
#include <random>

#include "dynbc/discretize.hpp"
#include "dynbc/geometry.hpp"

using namespace dynbc;

namespace {

DomainSpec unit_interval() { return DomainSpec::interval(0.0, 1.0, 0.5, {0.3, 0.7, {}, 0.0}); }
DomainSpec unit_disk() { return DomainSpec::disk({0.0, 0.0}, 1.0, {0.0, 0.0}, {0, 0, {0.0, 0.0}, 0.5}); }

}  // namespace

TEST_SUITE("geometry") {
    TEST_CASE("domain validation") {
        CHECK_THROWS_AS(DomainSpec::interval(1.0, 0.0, 0.5, {0.3, 0.7, {}, 0}), std::invalid_argument);
        CHECK_THROWS_AS(DomainSpec::interval(0.0, 1.0, 1.0, {0.3, 0.7, {}, 0}), std::invalid_argument);
        CHECK_THROWS_AS(DomainSpec::interval(0.0, 1.0, 0.5, {-0.1, 0.7, {}, 0}), std::invalid_argument);
        CHECK_THROWS_AS(DomainSpec::interval(0.0, 1.0, 0.2, {0.3, 0.7, {}, 0}), std::invalid_argument);
        CHECK_THROWS_AS(DomainSpec::disk({0, 0}, 1.0, {0, 0}, {0, 0, {0.6, 0}, 0.5}), std::invalid_argument);
        CHECK_THROWS_AS(DomainSpec::disk({0, 0}, -1.0, {0, 0}, {0, 0, {0, 0}, 0.5}), std::invalid_argument);
        CHECK_THROWS_AS(DomainSpec::disk({0, 0}, 1.0, {0.45, 0}, {0, 0, {0, 0}, 0.3}), std::invalid_argument);
        CHECK_NOTHROW(unit_disk());
        CHECK(unit_interval().measure() == doctest::Approx(1.0));
        CHECK(unit_disk().measure() == doctest::Approx(std::numbers::pi));
        CHECK(unit_disk().boundary_measure() == doctest::Approx(2 * std::numbers::pi));
    }

    TEST_CASE("gauge is convex and positively homogeneous") {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(-0.7, 0.7);
        for (const DomainSpec& d : {unit_interval(), unit_disk()}) {
            const Point c = d.kind() == DomainKind::interval ? Point{0.5, 0} : d.center();
            for (int k = 0; k < 200; ++k) {
                Point x{c.x + u(rng), d.dim() == 2 ? c.y + u(rng) : 0.0};
                Point y{c.x + u(rng), d.dim() == 2 ? c.y + u(rng) : 0.0};
                const Point mid = 0.5 * (x + y);
                CHECK(gauge_value(d, mid) <= 0.5 * (gauge_value(d, x) + gauge_value(d, y)) + 1e-14);
                const double t = 0.3;
                CHECK(gauge_value(d, c + t * (x - c)) == doctest::Approx(t * gauge_value(d, x)).epsilon(1e-13));
            }
        }
    }

    TEST_CASE("level function and normals on the boundary") {
        const auto I = unit_interval();
        CHECK(level_function(I, {0.0, 0}) == doctest::Approx(0.0));
        CHECK(level_function(I, {0.5, 0}) < 0.0);
        CHECK(outward_normal(I, {0.0, 0}).x == -1.0);
        CHECK(outward_normal(I, {1.0, 0}).x == 1.0);
        CHECK_THROWS(outward_normal(I, {0.5, 0}));
        const auto D = unit_disk();
        const Point p{std::cos(0.7), std::sin(0.7)};
        CHECK(level_function(D, p) == doctest::Approx(0.0).epsilon(1e-14));
        const Point n = outward_normal(D, p);
        CHECK(n.x == doctest::Approx(p.x));
        CHECK(n.y == doctest::Approx(p.y));
    }

    TEST_CASE("weight function derivatives") {
        const auto D = unit_disk();
        const PhiBundle b = weight_phi_bundle(D, {0.3, -0.4});
        CHECK(b.phi == doctest::Approx(-0.25 * 0.25));
        CHECK(b.grad.x == doctest::Approx(-0.15));
        CHECK(b.grad.y == doctest::Approx(0.2));
        CHECK(b.laplacian == doctest::Approx(-1.0));
        CHECK(weight_phi_bundle(unit_interval(), {0.1, 0}).laplacian == doctest::Approx(-0.5));
        CHECK_THROWS_AS(weight_phi_bundle(D, {0.3, -0.4}, true), std::invalid_argument);
        const PhiBundle nb = weight_phi_bundle(D, {1.0, 0.0}, true);
        REQUIRE(nb.normal_deriv);
        CHECK(*nb.normal_deriv == doctest::Approx(-0.5));
    }

    TEST_CASE("frozen weight values") {
        const WeightParams p{0.5, 0.5, 1.0};
        CHECK(p.time_scale(0.0) == doctest::Approx(1.5));
        // phi(1, 0) = -1/4, time_scale(0) = 3/2
        CHECK(big_phi(p, unit_disk(), {1.0, 0.0}, 0.0) == doctest::Approx(-1.0 / 12.0).epsilon(1e-15));
        CHECK(big_phi_dt(p, unit_disk(), {1.0, 0.0}, 0.0) == doctest::Approx(-1.0 / 18.0).epsilon(1e-15));
        CHECK_THROWS_AS(big_phi(p, unit_disk(), {0, 0}, 1.5), std::out_of_range);
        CHECK_THROWS_AS(big_phi(p, unit_disk(), {0, 0}, -0.1), std::out_of_range);
        CHECK_THROWS_AS((WeightParams{0.0, 0.5, 1.0}.validate()), std::invalid_argument);
        CHECK_THROWS_AS((WeightParams{0.5, -1.0, 1.0}.validate()), std::invalid_argument);
    }

    TEST_CASE("normal sign condition on boundary nodes") {
        for (const DomainSpec& d : {unit_interval(), unit_disk()}) {
            const auto disc = assemble(d, d.dim() == 1 ? Resolution{16, 0, 0} : Resolution{0, 6, 16});
            std::vector<Point> bnodes(disc.grid.nodes.begin() + static_cast<std::ptrdiff_t>(disc.grid.trace_offset()),
                                      disc.grid.nodes.end());
            const NormalSignReport r = check_normal_sign(d, bnodes);
            CHECK(r.pass);
            CHECK(r.max_value < 0.0);
        }
        const auto off = DomainSpec::disk({0, 0}, 1.0, {0.5, 0}, {0, 0, {0.5, 0}, 0.3});
        const auto r = check_normal_sign(off, std::vector<Point>{{1, 0}, {-1, 0}});
        CHECK(r.min_value == doctest::Approx(-1.5));
        CHECK(r.max_value == doctest::Approx(-0.5));
    }
}
