#pragma once

#include <optional>
#include <span>
#include <string>

namespace dynbc {

// Interval points use x only.
struct Point {
    double x = 0.0;
    double y = 0.0;
};

inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double norm2(Point a) { return dot(a, a); }

enum class DomainKind { interval, disk };

// Interval: open sub-interval (lo, hi). Disk: open ball of radius `radius` about `center`.
struct ObservationRegion {
    double lo = 0.0;
    double hi = 0.0;
    Point center{};
    double radius = 0.0;
};

class DomainSpec {
public:
    static DomainSpec interval(double a, double b, double x0, ObservationRegion omega);
    static DomainSpec disk(Point center, double R, Point x0, ObservationRegion omega);

    DomainKind kind() const { return kind_; }
    int dim() const { return kind_ == DomainKind::interval ? 1 : 2; }
    double a() const { return a_; }
    double b() const { return b_; }
    Point center() const { return center_; }
    double radius() const { return radius_; }
    Point x0() const { return x0_; }
    const ObservationRegion& omega() const { return omega_; }

    bool in_omega(Point p) const;
    double measure() const;           // |Omega|
    double boundary_measure() const;  // |Gamma| (counting measure on the interval)
    std::string describe() const;

private:
    void validate() const;

    DomainKind kind_ = DomainKind::interval;
    double a_ = 0.0, b_ = 1.0;
    Point center_{};
    double radius_ = 1.0;
    Point x0_{};
    ObservationRegion omega_{};
};

// Minkowski gauge about the domain center; equals 1 on the boundary.
double gauge_value(const DomainSpec& domain, Point x);
// Level function j^2 - 1: negative inside, zero on the boundary.
double level_function(const DomainSpec& domain, Point x);

Point outward_normal(const DomainSpec& domain, Point boundary_point);
bool on_boundary(const DomainSpec& domain, Point x, double tol = 1e-9);

struct PhiBundle {
    double phi = 0.0;
    Point grad{};
    double laplacian = 0.0;
    std::optional<double> normal_deriv;
};

// phi = -|x - x0|^2 / 4 and its derivatives. The normal derivative is
// filled only when with_normal is set, and then x must lie on the boundary.
PhiBundle weight_phi_bundle(const DomainSpec& domain, Point x, bool with_normal = false);

struct WeightParams {
    double s = 0.5;
    double h = 0.5;
    double T = 1.0;

    void validate() const;
    double time_scale(double t) const;  // T - t + h
};

// s*phi(x)/time_scale(t); throws std::out_of_range for t outside [0, T].
double big_phi(const WeightParams& params, const DomainSpec& domain, Point x, double t);
double big_phi_dt(const WeightParams& params, const DomainSpec& domain, Point x, double t);

struct NormalSignReport {
    double min_value = 0.0;
    double max_value = 0.0;
    bool pass = false;
};

// Evaluates -(x - x0).nu at the given boundary nodes.
NormalSignReport check_normal_sign(const DomainSpec& domain, std::span<const Point> boundary_nodes);

}  // namespace dynbc
