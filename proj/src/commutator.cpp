#include <boost/math/quadrature/gauss.hpp>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "dynbc/logconvexity.hpp"

namespace dynbc {

namespace {

using boost::math::quadrature::gauss;

template <class F>
double integrate_line(F&& f, double a, double b, int panels = 8) {
    double sum = 0.0;
    const double w = (b - a) / panels;
    for (int p = 0; p < panels; ++p) sum += gauss<double, 20>::integrate(f, a + p * w, a + (p + 1) * w);
    return sum;
}

bool centered(const DomainSpec& d) {
    return std::sqrt(norm2(d.x0() - d.center())) <= 1e-14 * std::max(1.0, d.radius());
}

// value, first and second derivative of a 1-D function of xi = x - a
struct Jet {
    double v, d1, d2;
};

}  // namespace

ManufacturedField compatible_interval_field(const DomainSpec& domain, const WeightParams& p, double t) {
    if (domain.kind() != DomainKind::interval) throw std::invalid_argument("compatible_interval_field needs an interval");
    p.validate();
    const double a = domain.a();
    auto base = [](double xi) -> Jet {
        const double e = std::exp(-xi), c = std::cos(2.0 * xi), s = std::sin(2.0 * xi);
        return {e * c + xi * xi * xi, -e * c - 2.0 * e * s + 3.0 * xi * xi, e * (-3.0 * c + 4.0 * s) + 6.0 * xi};
    };
    auto lin = [](double xi) -> Jet { return {xi, 1.0, 0.0}; };
    auto quad = [](double xi) -> Jet { return {xi * xi, 2.0 * xi, 2.0}; };
    const double ups = p.time_scale(t);
    // f'' + (s^2 |grad phi|^2 / (4 time_scale^2)) f + d_nu f = 0 at both ends
    auto op = [&](const Jet& j, double x, double nu) {
        const PhiBundle pb = weight_phi_bundle(domain, {x, 0.0});
        const double k = p.s * p.s * norm2(pb.grad) / (4.0 * ups * ups);
        return j.d2 + k * j.v + nu * j.d1;
    };
    const std::array<double, 2> xb{domain.a(), domain.b()};
    const std::array<double, 2> nub{-1.0, 1.0};
    double m[2][2], rhs[2];
    for (int r = 0; r < 2; ++r) {
        const double xi = xb[r] - a;
        m[r][0] = op(lin(xi), xb[r], nub[r]);
        m[r][1] = op(quad(xi), xb[r], nub[r]);
        rhs[r] = -op(base(xi), xb[r], nub[r]);
    }
    const double det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if (std::abs(det) < 1e-14) throw std::runtime_error("compatible_interval_field: singular compatibility system");
    const double c1 = (rhs[0] * m[1][1] - m[0][1] * rhs[1]) / det;
    const double c2 = (m[0][0] * rhs[1] - rhs[0] * m[1][0]) / det;
    ManufacturedField f;
    f.value = [=](Point x) {
        const double xi = x.x - a;
        return base(xi).v + c1 * xi + c2 * xi * xi;
    };
    f.grad = [=](Point x) {
        const double xi = x.x - a;
        return Point{base(xi).d1 + c1 + 2.0 * c2 * xi, 0.0};
    };
    return f;
}

ManufacturedField radial_bump_field(const DomainSpec& domain) {
    const Point c = domain.center();
    ManufacturedField f;
    f.value = [c](Point x) { return std::exp(-2.0 * norm2(x - c)) + 0.3; };
    f.grad = [c](Point x) {
        const Point d = x - c;
        return (-4.0 * std::exp(-2.0 * norm2(d))) * d;
    };
    return f;
}

ManufacturedField default_manufactured_field(const DomainSpec& domain, const WeightParams& p, double t) {
    if (domain.kind() == DomainKind::interval) return compatible_interval_field(domain, p, t);
    return radial_bump_field(domain);
}

double commutator_rhs(const ManufacturedField& f, const DomainSpec& domain, const WeightParams& p, double t) {
    p.validate();
    if (domain.kind() == DomainKind::disk && !centered(domain))
        throw std::invalid_argument("unsupported configuration: commutator check on a disk needs x0 at the center");
    const double s = p.s;
    const double u = p.time_scale(t);
    const double u3 = u * u * u;
    auto bulk = [&](Point x) {
        const PhiBundle pb = weight_phi_bundle(domain, x);
        const double fv = f.value(x);
        const double g2 = norm2(pb.grad);
        return -s / u3 * (pb.phi + 0.5 * s * g2) * fv * fv + s / u * norm2(f.grad(x)) -
               s * s * (2.0 - s) / (4.0 * u3) * g2 * fv * fv;
    };
    // tangential derivatives of phi vanish in both supported settings
    auto boundary = [&](Point x) {
        const PhiBundle pb = weight_phi_bundle(domain, x, true);
        const Point nu = outward_normal(domain, x);
        const double dnphi = *pb.normal_deriv;
        const double fv = f.value(x);
        const double dnf = dot(f.grad(x), nu);
        return s / u * dnphi * dnf * dnf - s / u3 * pb.phi * fv * fv + s / u * (pb.laplacian + dnphi) * dnf * fv +
               s * s * s / (4.0 * u3) * dnphi * dnphi * dnphi * fv * fv;
    };
    if (domain.kind() == DomainKind::interval) {
        const double vol = integrate_line([&](double x) { return bulk({x, 0.0}); }, domain.a(), domain.b());
        return vol + boundary({domain.a(), 0.0}) + boundary({domain.b(), 0.0});
    }
    const Point c = domain.center();
    const double R = domain.radius();
    const int nth = 256;
    const double dth = 2.0 * std::numbers::pi / nth;
    double vol = 0.0, surf = 0.0;
    for (int j = 0; j < nth; ++j) {
        const double th = j * dth;
        const Point dir{std::cos(th), std::sin(th)};
        vol += dth * integrate_line([&](double r) { return r * bulk(c + r * dir); }, 0.0, R);
        surf += dth * R * boundary(c + R * dir);
    }
    return vol + surf;
}

std::vector<CommutatorRow> commutator_identity_check(const ManufacturedField& f, const DomainSpec& domain,
                                                     const WeightParams& p, double t,
                                                     std::span<const Resolution> resolutions) {
    if (domain.kind() == DomainKind::disk && !centered(domain))
        throw std::invalid_argument("unsupported configuration: commutator check on a disk needs x0 at the center");
    const double rhs = commutator_rhs(f, domain, p, t);
    std::vector<CommutatorRow> rows;
    for (const Resolution& res : resolutions) {
        const Discretization disc = assemble(domain, res);
        const WeightSetting ws(disc, domain, p);
        const WeightedOperators w(ws, t);
        const State fv = sample(disc.grid, f.value);
        CommutatorRow row;
        row.res = res;
        row.dofs = disc.grid.size();
        row.lhs = w.commutator_form(fv);
        row.rhs = rhs;
        row.rel_residual = rhs != 0.0 ? std::abs(row.lhs - rhs) / std::abs(rhs) : std::abs(row.lhs);
        if (!rows.empty()) {
            const CommutatorRow& prev = rows.back();
            const double ratio = domain.kind() == DomainKind::interval ? double(res.n) / prev.res.n
                                                                       : double(res.nr) / prev.res.nr;
            if (ratio > 1.0 && prev.rel_residual > 0.0 && row.rel_residual > 0.0)
                row.order = std::log(prev.rel_residual / row.rel_residual) / std::log(ratio);
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace dynbc
