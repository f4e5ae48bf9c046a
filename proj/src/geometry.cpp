#include "dynbc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace dynbc {

DomainSpec DomainSpec::interval(double a, double b, double x0, ObservationRegion omega) {
    DomainSpec d;
    d.kind_ = DomainKind::interval;
    d.a_ = a;
    d.b_ = b;
    d.center_ = {0.5 * (a + b), 0.0};
    d.radius_ = 0.5 * (b - a);
    d.x0_ = {x0, 0.0};
    d.omega_ = omega;
    d.validate();
    return d;
}

DomainSpec DomainSpec::disk(Point center, double R, Point x0, ObservationRegion omega) {
    DomainSpec d;
    d.kind_ = DomainKind::disk;
    d.center_ = center;
    d.radius_ = R;
    d.x0_ = x0;
    d.omega_ = omega;
    d.validate();
    return d;
}

void DomainSpec::validate() const {
    if (kind_ == DomainKind::interval) {
        if (!(a_ < b_)) throw std::invalid_argument("invalid domain: interval needs a < b");
        const double x = x0_.x;
        if (!(x > a_ && x < b_)) throw std::invalid_argument("invalid domain: x0 must lie strictly inside (a, b)");
        if (!(omega_.lo < omega_.hi)) throw std::invalid_argument("invalid domain: omega needs lo < hi");
        if (!(omega_.lo > a_ && omega_.hi < b_))
            throw std::invalid_argument("invalid domain: closure of omega must lie inside the domain");
    } else {
        if (!(radius_ > 0.0)) throw std::invalid_argument("invalid domain: disk radius must be positive");
        if (!(std::sqrt(norm2(x0_ - center_)) < radius_))
            throw std::invalid_argument("invalid domain: x0 must lie strictly inside the disk");
        if (!(omega_.radius > 0.0)) throw std::invalid_argument("invalid domain: omega radius must be positive");
        if (!(std::sqrt(norm2(omega_.center - center_)) + omega_.radius < radius_))
            throw std::invalid_argument("invalid domain: closure of omega must lie inside the domain");
    }
    if (!in_omega(x0_)) throw std::invalid_argument("invalid domain: x0 must lie in omega");
}

bool DomainSpec::in_omega(Point p) const {
    if (kind_ == DomainKind::interval) return p.x > omega_.lo && p.x < omega_.hi;
    return norm2(p - omega_.center) < omega_.radius * omega_.radius;
}

double DomainSpec::measure() const {
    if (kind_ == DomainKind::interval) return b_ - a_;
    return std::numbers::pi * radius_ * radius_;
}

double DomainSpec::boundary_measure() const {
    if (kind_ == DomainKind::interval) return 2.0;
    return 2.0 * std::numbers::pi * radius_;
}

std::string DomainSpec::describe() const {
    std::ostringstream os;
    os.precision(17);
    if (kind_ == DomainKind::interval)
        os << "interval(" << a_ << ", " << b_ << ") x0=" << x0_.x;
    else
        os << "disk(center=(" << center_.x << ", " << center_.y << "), R=" << radius_ << ") x0=(" << x0_.x << ", "
           << x0_.y << ")";
    return os.str();
}

double gauge_value(const DomainSpec& domain, Point x) {
    if (domain.kind() == DomainKind::interval) return std::abs(x.x - domain.center().x) / domain.radius();
    return std::sqrt(norm2(x - domain.center())) / domain.radius();
}

double level_function(const DomainSpec& domain, Point x) {
    const double j = gauge_value(domain, x);
    return j * j - 1.0;
}

bool on_boundary(const DomainSpec& domain, Point x, double tol) {
    return std::abs(gauge_value(domain, x) - 1.0) <= tol;
}

Point outward_normal(const DomainSpec& domain, Point p) {
    if (!on_boundary(domain, p)) throw std::invalid_argument("outward_normal: point is not on the boundary");
    if (domain.kind() == DomainKind::interval) return {p.x > domain.center().x ? 1.0 : -1.0, 0.0};
    const Point r = p - domain.center();
    const double len = std::sqrt(norm2(r));
    return {r.x / len, r.y / len};
}

PhiBundle weight_phi_bundle(const DomainSpec& domain, Point x, bool with_normal) {
    const Point d = x - domain.x0();
    PhiBundle out;
    out.phi = -0.25 * norm2(d);
    out.grad = -0.5 * d;
    if (domain.kind() == DomainKind::interval) out.grad.y = 0.0;
    out.laplacian = -0.5 * domain.dim();
    if (with_normal) {
        if (!on_boundary(domain, x))
            throw std::invalid_argument("weight_phi_bundle: normal derivative requested at an interior point");
        out.normal_deriv = dot(out.grad, outward_normal(domain, x));
    }
    return out;
}

void WeightParams::validate() const {
    if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("weight.s must lie in (0, 1)");
    if (!(h > 0.0)) throw std::invalid_argument("weight.h must be positive");
    if (!(T > 0.0)) throw std::invalid_argument("time.T must be positive");
}

double WeightParams::time_scale(double t) const { return T - t + h; }

namespace {
void check_time(const WeightParams& p, double t) {
    // allow rounding from accumulated step counts
    const double tol = 1e-12 * std::max(1.0, p.T);
    if (t < -tol || t > p.T + tol) throw std::out_of_range("time outside [0, T]");
}
}  // namespace

double big_phi(const WeightParams& params, const DomainSpec& domain, Point x, double t) {
    check_time(params, t);
    return params.s * weight_phi_bundle(domain, x).phi / params.time_scale(t);
}

double big_phi_dt(const WeightParams& params, const DomainSpec& domain, Point x, double t) {
    check_time(params, t);
    const double u = params.time_scale(t);
    return params.s * weight_phi_bundle(domain, x).phi / (u * u);
}

NormalSignReport check_normal_sign(const DomainSpec& domain, std::span<const Point> boundary_nodes) {
    if (on_boundary(domain, domain.x0())) throw std::invalid_argument("invalid domain: x0 lies on the boundary");
    NormalSignReport r;
    r.min_value = std::numeric_limits<double>::infinity();
    r.max_value = -std::numeric_limits<double>::infinity();
    for (const Point& p : boundary_nodes) {
        const double v = -dot(p - domain.x0(), outward_normal(domain, p));
        r.min_value = std::min(r.min_value, v);
        r.max_value = std::max(r.max_value, v);
    }
    r.pass = !boundary_nodes.empty() && r.max_value < 0.0;
    return r;
}

}  // namespace dynbc
