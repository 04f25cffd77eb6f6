#include "monopolist/square_ode.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace monopolist {

double PiecewiseLinear::operator()(double t) const {
    if (x.empty()) return 0.0;
    if (t <= x.front()) return y.front();
    if (t >= x.back()) return y.back();
    auto it = std::upper_bound(x.begin(), x.end(), t);
    const size_t k = (size_t)(it - x.begin());
    const double w = (t - x[k - 1]) / (x[k] - x[k - 1]);
    return (1.0 - w) * y[k - 1] + w * y[k];
}

double LeafProfile::d(int k) const {
    return a + mp[k] * std::sin(theta[k]) - m[k] * std::cos(theta[k]);
}

namespace {

struct State {
    double m, mp, h, b;
};

State rhs(double a, double th, const State& s, double R) {
    const double sn = std::sin(th), cs = std::cos(th);
    const double d = a + s.mp * sn - s.m * cs;
    if (d <= 1e-10) throw std::runtime_error("denominator collapse");
    State out;
    out.m = s.mp;
    out.mp = -s.m + 2.0 * R + 1.5 * R * R * cs / d;
    out.h = R * R / (2.0 * d);
    out.b = (s.mp * cs + s.m * sn) * out.h;
    return out;
}

State rk4_step(double a, double th, const State& s, double dt,
               const std::function<double(double)>& Rfun) {
    const State k1 = rhs(a, th, s, Rfun(th));
    auto advance = [&](const State& k, double f) {
        return State{s.m + f * dt * k.m, s.mp + f * dt * k.mp,
                     s.h + f * dt * k.h, s.b + f * dt * k.b};
    };
    const State k2 = rhs(a, th + 0.5 * dt, advance(k1, 0.5), Rfun(th + 0.5 * dt));
    const State k3 = rhs(a, th + 0.5 * dt, advance(k2, 0.5), Rfun(th + 0.5 * dt));
    const State k4 = rhs(a, th + dt, advance(k3, 1.0), Rfun(th + dt));
    return State{s.m + dt / 6.0 * (k1.m + 2 * k2.m + 2 * k3.m + k4.m),
                 s.mp + dt / 6.0 * (k1.mp + 2 * k2.mp + 2 * k3.mp + k4.mp),
                 s.h + dt / 6.0 * (k1.h + 2 * k2.h + 2 * k3.h + k4.h),
                 s.b + dt / 6.0 * (k1.b + 2 * k2.b + 2 * k3.b + k4.b)};
}

State integrate_to_end(double a, double theta0, double theta_end, State s,
                       const std::function<double(double)>& Rfun, double step) {
    const int nsteps = std::max(1, (int)std::ceil((theta_end - theta0) / step));
    const double dt = (theta_end - theta0) / nsteps;
    double th = theta0;
    for (int k = 0; k < nsteps; ++k) {
        s = rk4_step(a, th, s, dt, Rfun);
        th = theta0 + (k + 1) * dt;
    }
    return s;
}

}  // namespace

LeafProfile integrate_slope_el(double a, double theta0, double h0, double R0,
                               const std::function<double(double)>& Rfun,
                               double step, double b0, double mp0) {
    if (a <= 0.0) throw std::invalid_argument("a must be positive");
    if (theta0 < -M_PI / 4 - 1e-12 || theta0 >= 0.0)
        throw std::invalid_argument("theta0 must lie in [-pi/4, 0)");
    if (R0 < 0.0 || R0 >= std::sqrt(2.0) / 2.0)
        throw std::invalid_argument("R0 must lie in [0, sqrt(2)/2)");
    if (std::abs(Rfun(theta0) - R0) > 1e-9)
        throw std::invalid_argument("Rfun(theta0) must equal R0");
    if (step <= 0.0) throw std::invalid_argument("step must be positive");

    // Clip the grid at the first angle where a positive R(.) hits zero.
    double theta_end = 0.0;
    if (R0 > 0.0) {
        for (double th = theta0; th < 0.0; th += step) {
            if (Rfun(th) <= 0.0) {
                theta_end = th;
                break;
            }
        }
    }
    if (theta_end <= theta0) theta_end = theta0 + step;

    LeafProfile p;
    p.a = a;
    p.theta0 = theta0;
    p.h0 = h0;
    p.R0 = R0;
    p.step = step;

    const int nsteps = std::max(1, (int)std::ceil((theta_end - theta0) / step));
    const double dt = (theta_end - theta0) / nsteps;

    State s{0.0, mp0, h0, b0};
    auto push = [&](double th, const State& st) {
        p.theta.push_back(th);
        p.m.push_back(st.m);
        p.mp.push_back(st.mp);
        p.h.push_back(st.h);
        p.b.push_back(st.b);
        p.R.push_back(std::max(0.0, Rfun(th)));
        if (st.h <= a || st.h >= a + 1.0)
            throw std::runtime_error("height overflow");
    };
    push(theta0, s);
    double th = theta0;
    for (int k = 0; k < nsteps; ++k) {
        s = rk4_step(a, th, s, dt, Rfun);
        th = theta0 + (k + 1) * dt;
        push(th, s);
    }

    // Half-step Richardson estimate at the far end.
    const State fine = integrate_to_end(a, theta0, theta_end,
                                        State{0.0, mp0, h0, b0}, Rfun, dt / 2);
    p.step_error = std::max({std::abs(fine.m - s.m), std::abs(fine.mp - s.mp),
                             std::abs(fine.h - s.h), std::abs(fine.b - s.b)});
    return p;
}

bool U1Piece::locate(double x1, double x2, double& theta, double& r) const {
    const LeafProfile& p = profile;
    auto g = [&](double th, double hh) {
        return (x1 - p.a) * std::sin(th) - (x2 - hh) * std::cos(th);
    };
    const int n = p.size();
    int lo = -1;
    double gprev = g(p.theta[0], p.h[0]);
    for (int k = 1; k < n; ++k) {
        const double gk = g(p.theta[k], p.h[k]);
        if (gprev <= 0.0 && gk >= 0.0) {
            lo = k - 1;
            break;
        }
        gprev = gk;
    }
    if (lo < 0) {
        // allow the end rays themselves
        if (std::abs(gprev) < 1e-12) lo = n - 2;
        else return false;
    }
    // bisection on the linear interpolant of h between samples
    double ta = p.theta[lo], tb = p.theta[lo + 1];
    auto hat = [&](double t) {
        const double w = (t - p.theta[lo]) / (p.theta[lo + 1] - p.theta[lo]);
        return (1.0 - w) * p.h[lo] + w * p.h[lo + 1];
    };
    for (int it = 0; it < 60; ++it) {
        const double tm = 0.5 * (ta + tb);
        if (g(tm, hat(tm)) <= 0.0) ta = tm;
        else tb = tm;
    }
    theta = 0.5 * (ta + tb);
    const double hh = hat(theta);
    r = (x1 - p.a) * std::cos(theta) + (x2 - hh) * std::sin(theta);
    const double w = (theta - p.theta[lo]) / (p.theta[lo + 1] - p.theta[lo]);
    const double Rt = (1.0 - w) * p.R[lo] + w * p.R[lo + 1];
    const double tol = 1e-9 + 2.0 * p.step;
    return r >= -tol && r <= Rt + tol;
}

bool U1Piece::contains(double x1, double x2) const {
    double th, r;
    return locate(x1, x2, th, r);
}

namespace {

double interp(const std::vector<double>& xs, const std::vector<double>& ys,
              double x) {
    PiecewiseLinear pl{xs, ys};
    return pl(x);
}

}  // namespace

double U1Piece::value(double x1, double x2) const {
    double th, r;
    if (!locate(x1, x2, th, r)) throw std::runtime_error("outside region");
    return interp(profile.theta, profile.m, th) * std::max(0.0, r) +
           interp(profile.theta, profile.b, th);
}

std::array<double, 2> U1Piece::gradient_at(double theta) const {
    const double m = interp(profile.theta, profile.m, theta);
    const double mp = interp(profile.theta, profile.mp, theta);
    const double cs = std::cos(theta), sn = std::sin(theta);
    return {m * cs - mp * sn, m * sn + mp * cs};
}

std::array<double, 2> U1Piece::gradient(double x1, double x2) const {
    double th, r;
    if (!locate(x1, x2, th, r)) throw std::runtime_error("outside region");
    return gradient_at(th);
}

std::vector<std::array<double, 2>> U1Piece::polygon() const {
    const LeafProfile& p = profile;
    std::vector<std::array<double, 2>> poly;
    const int n = p.size();
    const int stride = std::max(1, n / 64);
    auto foot = [&](int k) {
        return std::array<double, 2>{p.a, p.h[k]};
    };
    auto tip = [&](int k) {
        return std::array<double, 2>{p.a + p.R[k] * std::cos(p.theta[k]),
                                     p.h[k] + p.R[k] * std::sin(p.theta[k])};
    };
    poly.push_back(foot(0));
    for (int k = 0; k < n; k += stride) poly.push_back(tip(k));
    if ((n - 1) % stride != 0) poly.push_back(tip(n - 1));
    for (int k = n - 1; k >= 0; k -= stride) poly.push_back(foot(k));
    return poly;
}

U1Piece u1_from_profile(const LeafProfile& profile) { return U1Piece{profile}; }

BluntZone blunt_zone(double a) {
    if (a <= 0.0) throw std::invalid_argument("blunt_zone requires a > 0");
    BluntZone z;
    z.a = a;
    z.s = 2.0 * a + (2.0 * a / 3.0) * (std::sqrt(1.0 + 3.0 / (2.0 * a * a)) - 1.0);
    z.blunt_expected = a >= 3.5 - std::sqrt(2.0);
    z.ray_dir = {std::sqrt(0.5), -std::sqrt(0.5)};
    return z;
}

StingrayCurve stingray_curve(const LeafProfile& p) {
    const int n = p.size();
    StingrayCurve c;
    c.theta = p.theta;
    c.y1.resize(n);
    c.y2.resize(n);
    for (int k = 0; k < n; ++k) {
        const double cs = std::cos(p.theta[k]), sn = std::sin(p.theta[k]);
        c.y1[k] = p.m[k] * cs - p.mp[k] * sn;
        c.y2[k] = p.m[k] * sn + p.mp[k] * cs;
    }
    // slope = dy2/dy1 via second-order theta-derivatives of each component
    auto deriv = [&](const std::vector<double>& y, int k) {
        if (k == 0) return (-3.0 * y[0] + 4.0 * y[1] - y[2]);
        if (k == n - 1) return (3.0 * y[n - 1] - 4.0 * y[n - 2] + y[n - 3]);
        return y[k + 1] - y[k - 1];
    };
    c.slope.resize(n);
    for (int k = 0; k < n; ++k) c.slope[k] = deriv(c.y2, k) / deriv(c.y1, k);
    c.slope_dtheta.resize(n);
    const double dt = n > 1 ? p.theta[1] - p.theta[0] : 1.0;
    for (int k = 0; k < n; ++k)
        c.slope_dtheta[k] = deriv(c.slope, k) / (2.0 * dt);
    return c;
}

double StripProfile::value(double cc) const { return interp(c, U, cc); }
double StripProfile::slope(double cc) const { return interp(c, Up, cc); }

StripProfile integrate_strip(double a, double s0, double s1, double step) {
    if (s0 <= 2.0 * a) throw std::invalid_argument("strip must start past the corner");
    if (s1 <= s0) throw std::invalid_argument("empty strip");
    StripProfile sp;
    sp.a = a;
    sp.s0 = s0;
    const int nsteps = std::max(1, (int)std::ceil((s1 - s0) / step));
    const double dc = (s1 - s0) / nsteps;
    double U = 0.0, Up = 0.0, cc = s0;
    auto acc = [&](double c_, double up_) {
        return 0.5 * (3.0 + 2.0 * (a - up_) / (c_ - 2.0 * a));
    };
    sp.c.push_back(cc);
    sp.U.push_back(U);
    sp.Up.push_back(Up);
    for (int k = 0; k < nsteps; ++k) {
        const double k1u = Up, k1p = acc(cc, Up);
        const double k2u = Up + 0.5 * dc * k1p, k2p = acc(cc + 0.5 * dc, Up + 0.5 * dc * k1p);
        const double k3u = Up + 0.5 * dc * k2p, k3p = acc(cc + 0.5 * dc, Up + 0.5 * dc * k2p);
        const double k4u = Up + dc * k3p, k4p = acc(cc + dc, Up + dc * k3p);
        U += dc / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u);
        Up += dc / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p);
        cc = s0 + (k + 1) * dc;
        sp.c.push_back(cc);
        sp.U.push_back(U);
        sp.Up.push_back(Up);
    }
    return sp;
}

void write_profile_csv(const LeafProfile& p, const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "w");
    if (!fp) throw std::runtime_error("cannot open " + path);
    std::fprintf(fp, "theta,m,mprime,h,b,R\n");
    for (int k = 0; k < p.size(); ++k)
        std::fprintf(fp, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", p.theta[k],
                     p.m[k], p.mp[k], p.h[k], p.b[k], p.R[k]);
    std::fclose(fp);
}

}  // namespace monopolist
