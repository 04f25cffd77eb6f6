#pragma once

#include <array>
#include <functional>
#include <vector>

#include "monopolist/grid.hpp"

namespace monopolist {

// Ray-length input R(theta): piecewise linear through knots, clamped to the
// knot range at the ends.
struct PiecewiseLinear {
    std::vector<double> x, y;
    double operator()(double t) const;
};

// Solution of the slope Euler-Lagrange system on [theta0, theta_end]:
//   m'' = -m + 2R + (3/2) R^2 cos(theta) / d,   d = a + m' sin - m cos,
//   h'  = R^2 / (2 d),
//   b'  = (m' cos + m sin) h'.
// The grid clips at the first theta where R hits zero.
struct LeafProfile {
    double a = 0.0, theta0 = 0.0, h0 = 0.0, R0 = 0.0;
    std::vector<double> theta, m, mp, h, b, R;
    double step = 0.0;
    double step_error = 0.0;  // half-step Richardson estimate at the far end

    int size() const { return (int)theta.size(); }
    double d(int k) const;  // a + m' sin(theta) - m cos(theta)
};

LeafProfile integrate_slope_el(double a, double theta0, double h0, double R0,
                               const std::function<double(double)>& Rfun,
                               double step = 1e-4, double b0 = 0.0,
                               double mp0 = 0.0);

// Point evaluation of u1 on the swept region by inverting
// x = (a, h(theta)) + r (cos theta, sin theta).
struct U1Piece {
    LeafProfile profile;

    bool locate(double x1, double x2, double& theta, double& r) const;
    bool contains(double x1, double x2) const;
    double value(double x1, double x2) const;          // throws outside
    std::array<double, 2> gradient(double x1, double x2) const;
    std::array<double, 2> gradient_at(double theta) const;
    // Counterclockwise region polygon: theta0 ray, tip curve, theta_end ray,
    // foot curve.
    std::vector<std::array<double, 2>> polygon() const;
};

U1Piece u1_from_profile(const LeafProfile& profile);

struct BluntZone {
    double a = 0.0;
    double s = 0.0;                  // exclusion threshold s(a)
    bool blunt_expected = false;     // a >= 7/2 - sqrt(2)
    std::array<double, 2> ray_dir{};  // (cos(-pi/4), sin(-pi/4))
};

BluntZone blunt_zone(double a);

// Image curve theta -> Du on the ray (the tail of the stingray profile),
// with discrete slopes dy2/dy1 and their theta-derivative.
struct StingrayCurve {
    std::vector<double> theta, y1, y2;
    std::vector<double> slope;        // per sample, second-order differences
    std::vector<double> slope_dtheta; // discrete derivative of slope
};

StingrayCurve stingray_curve(const LeafProfile& profile);

// Blunt strip profile U(c) on [s0, s1]: u(x) = U(x1 + x2) on the orthogonal
// rays, from the leafwise zeroth moment 2U'' = 3 + 2(a - U')/(c - 2a) with
// U(s0) = 0, U'(s0) = 0.
struct StripProfile {
    double a = 0.0, s0 = 0.0;
    std::vector<double> c, U, Up;

    double value(double cc) const;
    double slope(double cc) const;
};

StripProfile integrate_strip(double a, double s0, double s1, double step = 1e-4);

void write_profile_csv(const LeafProfile& p, const std::string& path);

}  // namespace monopolist
