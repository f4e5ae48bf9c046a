#include <doctest.h>

#include <stdexcept>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <random>

#include "dynbc/logconvexity.hpp"
#include "dynbc/pipeline.hpp"

using namespace dynbc;

namespace {

const DomainSpec& unit_interval() {
    static const auto d = DomainSpec::interval(0.0, 1.0, 0.5, {0.3, 0.7, {}, 0.0});
    return d;
}

const DomainSpec& unit_disk() {
    static const auto d = DomainSpec::disk({0, 0}, 1.0, {0, 0}, {0, 0, {0, 0}, 0.5});
    return d;
}

State noise(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    State v(n);
    for (double& x : v) x = g(rng);
    return v;
}

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

Vec to_vec(const State& s) { return Eigen::Map<const Vec>(s.data(), static_cast<Eigen::Index>(s.size())); }

// Dense P1 = 1/2 dPhi/dt + E A E^{-1}, built from columns of the generator.
Mat dense_p1(const WeightSetting& ws, double t) {
    const auto& ops = ws.ops();
    const auto n = static_cast<Eigen::Index>(ops.size());
    const WeightParams& p = ws.params;
    const double ups = p.time_scale(t);
    Mat a(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        State e(ops.size(), 0.0);
        e[static_cast<std::size_t>(j)] = 1.0;
        a.col(j) = to_vec(ops.apply(e));
    }
    Vec big(n), dbig(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const Point x = ws.grid().nodes[static_cast<std::size_t>(k)];
        big[k] = big_phi(p, ws.domain, x, t);
        dbig[k] = p.s * weight_phi_bundle(ws.domain, x).phi / (ups * ups);
    }
    const Vec e = (0.5 * big.array()).exp();
    return (0.5 * dbig).asDiagonal().toDenseMatrix() + e.asDiagonal() * a * e.cwiseInverse().asDiagonal();
}

}  // namespace

TEST_SUITE("logconvexity") {
    TEST_CASE("weighted transform round trip") {
        const auto d = assemble(unit_interval(), {16, 0, 0});
        const WeightSetting ws(d, unit_interval(), {0.5, 0.5, 1.0});
        std::mt19937_64 rng(1);
        const State u = noise(d.ops.size(), rng);
        const State back = inverse_weighted_transform(weighted_transform(u, 0.4, ws), 0.4, ws);
        for (std::size_t i = 0; i < u.size(); ++i) CHECK(back[i] == doctest::Approx(u[i]).epsilon(1e-14));
        CHECK_THROWS_AS(weighted_transform(u, 1.5, ws), std::out_of_range);
    }

    TEST_CASE("splitting matches the dense symmetrization oracle") {
        const auto d = assemble(unit_interval(), {8, 0, 0});
        const WeightSetting ws(d, unit_interval(), {0.5, 0.5, 1.0});
        const double t = 0.35;
        const WeightedOperators w(ws, t);
        const Mat p1 = dense_p1(ws, t);
        const Vec m = to_vec(d.ops.mass);
        const Mat adj = m.cwiseInverse().asDiagonal() * p1.transpose() * m.asDiagonal();
        const Mat sym = 0.5 * (p1 + adj), anti = 0.5 * (p1 - adj);
        std::mt19937_64 rng(2);
        for (int k = 0; k < 10; ++k) {
            const State f = noise(d.ops.size(), rng);
            const Vec fs = sym * to_vec(f), fa = anti * to_vec(f);
            const Vec s = to_vec(w.apply_s(f)), a = to_vec(w.apply_anti(f)), p = to_vec(w.apply_p1(f));
            CHECK((s - fs).norm() <= 1e-12 * fs.norm());
            CHECK((a - fa).norm() <= 1e-12 * std::max(1.0, fa.norm()));
            CHECK((p - (fs + fa)).norm() <= 1e-12 * fs.norm());
        }
    }

    TEST_CASE("symmetric and antisymmetric parts in the mass inner product") {
        const auto d = assemble(unit_disk(), {0, 6, 16});
        const WeightSetting ws(d, unit_disk(), {0.5, 0.5, 1.0});
        const WeightedOperators w(ws, 0.6);
        std::mt19937_64 rng(3);
        for (int k = 0; k < 20; ++k) {
            const State f = noise(d.ops.size(), rng), g = noise(d.ops.size(), rng);
            const double ff = inner(f, f, d.ops);
            CHECK(std::abs(inner(w.apply_anti(f), f, d.ops)) <= 1e-12 * ff);
            const double l = inner(w.apply_s(f), g, d.ops), r = inner(f, w.apply_s(g), d.ops);
            CHECK(std::abs(l - r) <= 1e-12 * std::sqrt(ff * inner(g, g, d.ops)) * 10);
            CHECK(w.quad_s(f) == doctest::Approx(inner(w.apply_s(f), f, d.ops)).epsilon(1e-12));
        }
    }

    TEST_CASE("commutator form against dense differencing") {
        const auto d = assemble(unit_interval(), {8, 0, 0});
        const WeightSetting ws(d, unit_interval(), {0.5, 0.5, 1.0});
        const double t = 0.3, ups = ws.params.time_scale(t), dt = 1e-4;
        const Vec m = to_vec(d.ops.mass);
        auto ms = [&](double tt) {
            Mat p1 = dense_p1(ws, tt);
            Mat mp = m.asDiagonal() * p1;
            return Mat(0.5 * (mp + mp.transpose()));
        };
        const Mat mp = m.asDiagonal() * dense_p1(ws, t);
        const Mat b = 0.5 * (mp - mp.transpose());
        // Richardson extrapolated centered difference
        const Mat d1 = (ms(t + dt) - ms(t - dt)) / (2 * dt), d2 = (ms(t + 2 * dt) - ms(t - 2 * dt)) / (4 * dt);
        const Mat dms = (4 * d1 - d2) / 3;
        const WeightedOperators w(ws, t);
        std::mt19937_64 rng(4);
        for (int k = 0; k < 5; ++k) {
            const State f = noise(d.ops.size(), rng);
            const Vec fv = to_vec(f);
            const double ref = -fv.dot(dms * fv) - 2.0 * (ms(t) * fv).dot(m.cwiseInverse().asDiagonal() * (b * fv));
            CHECK(w.commutator_form(f) == doctest::Approx(ref).epsilon(1e-7));
            // the symmetric matrix reproduces the form
            State y(f.size());
            w.apply_commutator(f, y);
            CHECK(kernels::dot(f, y) == doctest::Approx(w.commutator_form(f)).epsilon(1e-10));
        }
        (void)ups;
    }

    TEST_CASE("frequency function") {
        const auto d = assemble(unit_interval(), {16, 0, 0});
        const WeightSetting ws(d, unit_interval(), {0.5, 0.5, 1.0});
        const WeightedOperators w(ws, 0.2);
        CHECK_THROWS_AS(frequency(State(d.ops.size(), 0.0), w), DegenerateDataError);
        std::mt19937_64 rng(5);
        const State f = noise(d.ops.size(), rng);
        CHECK(frequency(f, w) == doctest::Approx(-w.quad_s(f) / inner(f, f, d.ops)));
    }

    TEST_CASE("frozen multipliers") {
        CHECK(multiplier_m(0.875, 4.0) == doctest::Approx(7.681949331632075).epsilon(1e-14));
        CHECK(multiplier_d(0.1, 0.875, 4.0) == doctest::Approx(2 * 0.1 * 16 * (1 + 7.681949331632075)));
        CHECK_THROWS_AS(multiplier_m(1.2, 4.0), std::invalid_argument);
        CHECK_THROWS_AS(multiplier_m(0.5, 1.0), std::invalid_argument);
        const WeightParams p{0.5, 0.5, 1.0};
        CHECK(interpolation_exponent(0.2, 0.5, 0.9, 0.875, p) == doctest::Approx(2.747470280024958).epsilon(1e-13));
        // closed form against quadrature of time_scale^-(1+C0)
        auto f = [&](double t) { return std::pow(p.time_scale(t), -1.875); };
        using boost::math::quadrature::gauss_kronrod;
        const double num = gauss_kronrod<double, 31>::integrate(f, 0.1, 0.7);
        const double den = gauss_kronrod<double, 31>::integrate(f, 0.05, 0.1);
        CHECK(interpolation_exponent(0.05, 0.1, 0.7, 0.875, p) == doctest::Approx(num / den).epsilon(1e-12));
        const CostConstants c = cost_constants(0.5, 2.0, 3.0);
        CHECK(c.m1 == doctest::Approx(2.0).epsilon(1e-15));
        CHECK(c.m2 == doctest::Approx(6.0));
        CHECK(c.delta == doctest::Approx(1.0));
    }

    TEST_CASE("sign condition is reported") {
        const auto d = assemble(unit_interval(), {32, 0, 0});
        const WeightSetting ws(d, unit_interval(), {0.5, 0.5, 1.0});
        const SignConditionReport r = sign_condition(ws, 4.0);
        CHECK(r.min_phi == doctest::Approx(-0.0625));
        CHECK(r.value == doctest::Approx(-(1 + multiplier_m(0.875, 4.0)) / 5.0 * r.min_phi + r.max_phi_outside));
        CHECK_FALSE(r.holds);
    }

    TEST_CASE("observability fit on synthetic data") {
        std::vector<ObservationSample> s;
        for (int k = 0; k < 25; ++k) {
            const double b = -0.1 * (k + 1);
            s.push_back({std::exp(0.6 * b - 0.05 * (k % 3 == 0)), std::exp(b), 1.0});
        }
        const ObservabilitySet one{1.0, s};
        const ObservabilityFit f = fit_observability_constants(std::span(&one, 1), {});
        REQUIRE(f.ok);
        CHECK(f.beta > 0.55);
        CHECK(f.beta < 0.65);
        CHECK(f.m1 == doctest::Approx(cost_constants(f.beta, f.k1, f.k2).m1));
        const std::vector<ObservationSample> few(s.begin(), s.begin() + 5);
        const ObservabilitySet small{1.0, few};
        CHECK_THROWS_AS(fit_observability_constants(std::span(&small, 1), {}), std::invalid_argument);
        const ObservabilitySet same{1.0, std::vector<ObservationSample>(20, s[0])};
        const ObservabilityFit deg = fit_observability_constants(std::span(&same, 1), {});
        CHECK_FALSE(deg.ok);
        CHECK(deg.failure.find("degenerate") != std::string::npos);
        std::vector<ObservationSample> wrong;
        for (int k = 0; k < 20; ++k) wrong.push_back({std::exp(-0.1 * k), std::exp(-0.05 * k), 1.0});
        const ObservabilitySet bad{1.0, wrong};
        const ObservabilityFit out = fit_observability_constants(std::span(&bad, 1), {});
        CHECK_FALSE(out.ok);
        CHECK(out.failure.find("outside") != std::string::npos);
    }

    TEST_CASE("trace bound holds on its own training data") {
        const auto d = assemble(unit_interval(), {32, 0, 0});
        const WeightSetting ws(d, unit_interval(), {0.5, 0.5, 1.0});
        const Propagator prop(d.ops, 1e-2, Scheme::crank_nicolson);
        auto rng = make_rng(3, 1);
        std::vector<FrequencyTrace> tr;
        for (int k = 0; k < 3; ++k) tr.push_back(run_trace(random_smooth_state(d, unit_interval(), 6, rng), ws, prop, true));
        const double c = fit_commutator_constant(tr, ws);
        CHECK(c >= 0.0);
        for (const auto& t : tr) {
            CHECK(t.t.size() == 101);
            CHECK(c >= t.c - 1e-15);
            CHECK(count_bound_violations(t, c, ws) == 0);
        }
        CHECK_THROWS_AS(run_trace(State(d.ops.size(), 0.0), ws, prop), DegenerateDataError);
        const InterpolationResult r = interpolation_check(tr[0], 10, 40, 90, c, ws.params);
        CHECK(r.pass);
        CHECK_THROWS_AS(interpolation_check(tr[0], 0, 40, 90, c, ws.params), std::invalid_argument);
        CHECK_THROWS_AS(interpolation_check(tr[0], 40, 10, 90, c, ws.params), std::invalid_argument);
    }

    TEST_CASE("commutator identity under refinement") {
        const WeightParams p{0.5, 0.5, 1.0};
        const std::vector<Resolution> lines{{32, 0, 0}, {64, 0, 0}, {128, 0, 0}, {256, 0, 0}};
        const auto rows = commutator_identity_check(compatible_interval_field(unit_interval(), p, 0.3), unit_interval(),
                                                    p, 0.3, lines);
        for (std::size_t i = 1; i < rows.size(); ++i) {
            REQUIRE(rows[i].order);
            CHECK(*rows[i].order >= 1.9);
        }
        const std::vector<Resolution> disks{{0, 4, 8}, {0, 8, 16}, {0, 16, 32}};
        const auto drows = commutator_identity_check(radial_bump_field(unit_disk()), unit_disk(), p, 0.3, disks);
        for (std::size_t i = 1; i < drows.size(); ++i) CHECK(drows[i].rel_residual < drows[i - 1].rel_residual);
        const auto off = DomainSpec::disk({0, 0}, 1.0, {0.2, 0}, {0, 0, {0.2, 0}, 0.3});
        CHECK_THROWS_AS(commutator_identity_check(radial_bump_field(off), off, p, 0.3, disks), std::invalid_argument);
    }
}
