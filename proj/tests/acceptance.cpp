// End-to-end acceptance suite. Each numbered criterion prints exactly one
// PASS/FAIL line; the binary exits nonzero when any line fails. Progress and
// phase timings go to stderr so the stdout log stays one line per criterion.
//
// The heavy artifacts (the a-scan at n=129, the n=257 mass-balance solves,
// the fitted candidate at a=2.5) are computed once up front and shared by
// every criterion that needs them.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "monopolist/assembler.hpp"
#include "monopolist/grid.hpp"
#include "monopolist/leaf.hpp"
#include "monopolist/obstacle.hpp"
#include "monopolist/pipeline.hpp"
#include "monopolist/regions.hpp"
#include "monopolist/solver.hpp"
#include "monopolist/square_ode.hpp"

using namespace monopolist;

namespace {

constexpr double kPi4 = 0.78539816339744831;

double now_s() {
    using namespace std::chrono;
    return duration<double>(steady_clock::now().time_since_epoch()).count();
}

struct Suite {
    std::vector<std::pair<bool, std::string>> lines;
    bool all_ok = true;

    void criterion(int id, bool pass, const std::string& detail) {
        char head[64];
        std::snprintf(head, sizeof head, "criterion %2d", id);
        add(std::string(head), pass, detail);
    }
    void property(const std::string& name, bool pass, const std::string& detail) {
        add("property    " + name, pass, detail);
    }
    void add(const std::string& label, bool pass, const std::string& detail) {
        lines.emplace_back(pass, label + ": " + detail);
        all_ok = all_ok && pass;
        std::fprintf(stderr, "  -> %s %s\n", pass ? "PASS" : "FAIL",
                     lines.back().second.c_str());
    }
    int finish() const {
        for (const auto& [pass, text] : lines)
            std::printf("%s  %s\n", pass ? "PASS" : "FAIL", text.c_str());
        std::printf("%s\n", all_ok ? "acceptance: all criteria passed"
                                   : "acceptance: FAILURES present");
        return all_ok ? 0 : 1;
    }
};

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

// ---------------------------------------------------------------------------
// shared artifacts

struct Solved {
    SolveResult res;
    RegionMasks masks;
    RayExtraction rays;
    char regime = '?';
    double seconds = 0.0;
};

Solved solve_at(double a, int n, double tol_feas, int max_iters,
                double tol_energy = 1e-9) {
    std::fprintf(stderr, "[solve] a=%g n=%d tol=%g ...\n", a, n, tol_feas);
    const double t0 = now_s();
    Grid g = make_grid(a, n);
    SolveOptions opts;
    opts.max_iters = max_iters;
    opts.tol_feas = tol_feas;
    opts.tol_energy = tol_energy;
    Solved s;
    s.res = minimize(g, make_stencil(g), opts);
    s.masks = classify_regions(s.res.u);
    s.rays = extract_rays(s.res.u, s.masks);
    s.regime = classify_regime(s.masks, s.rays);
    s.seconds = now_s() - t0;
    std::fprintf(stderr, "[solve] a=%g n=%d: conv=%d iters=%d regime=%c %.1fs\n",
                 a, n, s.res.converged, s.res.iterations, s.regime, s.seconds);
    return s;
}

// trapezoid-weighted area of a node set
double node_area(const Grid& g, const std::function<bool(int, int)>& in) {
    double area = 0.0;
    const double hh = g.h() * g.h();
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
            if (!in(i, j)) continue;
            const double wi = (i == 0 || i == g.n - 1) ? 0.5 : 1.0;
            const double wj = (j == 0 || j == g.n - 1) ? 0.5 : 1.0;
            area += wi * wj * hh;
        }
    return area;
}

double hausdorff(const std::vector<std::array<double, 2>>& A,
                 const std::vector<std::array<double, 2>>& B) {
    auto one_sided = [](const auto& P, const auto& Q) {
        double worst = 0.0;
        for (const auto& p : P) {
            double best = 1e18;
            for (const auto& q : Q)
                best = std::min(best, std::hypot(p[0] - q[0], p[1] - q[1]));
            worst = std::max(worst, best);
        }
        return worst;
    };
    if (A.empty() || B.empty()) return 1e18;
    return std::max(one_sided(A, B), one_sided(B, A));
}

double median_abs(std::vector<double> v) {
    if (v.empty()) return 1e18;
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    return v[v.size() / 2];
}

double median_poisson_residual(const ScalarField& u, const RegionMasks& m) {
    const Grid& g = u.grid;
    const double h = g.h();
    std::vector<double> res;
    for (int i = 1; i < g.n - 1; ++i)
        for (int j = 1; j < g.n - 1; ++j) {
            if (m.labels[g.index(i, j)] != OMEGA2) continue;
            const double lap = (u.at(i + 1, j) + u.at(i - 1, j) + u.at(i, j + 1) +
                                u.at(i, j - 1) - 4.0 * u.at(i, j)) /
                               (h * h);
            res.push_back(std::abs(lap - 3.0));
        }
    return median_abs(std::move(res));
}

double neumann_min_noncorner(const ScalarField& u) {
    const BoundaryTrace tr = boundary_normal_residual(u);
    double worst = 0.0;
    for (const auto& nd : tr.nodes)
        if (!nd.corner) worst = std::min(worst, nd.value);
    return worst;
}

double blunt_gap(double theta) {
    return std::min(std::abs(theta + M_PI / 4), std::abs(theta - 3 * M_PI / 4));
}

// radial obstacle oracle, contact disk of radius r0 around (1/2, 1/2)
double radial_v(double x, double y, double r0) {
    const double rho = std::hypot(x - 0.5, y - 0.5);
    if (rho <= r0) return 0.0;
    return 0.75 * (rho * rho - r0 * r0) - 1.5 * r0 * r0 * std::log(rho / r0);
}

ObstacleProblem radial_problem(const Grid& g, double r0) {
    ObstacleProblem p(g);
    std::fill(p.f.begin(), p.f.end(), 3.0);
    for (int s = 0; s < 4; ++s) p.sides[s].kind = BoundaryKind::Dirichlet;
    for (int k = 0; k < g.n; ++k) {
        p.sides[0].values[k] = radial_v(g.x1(k), g.x2(0), r0);
        p.sides[2].values[k] = radial_v(g.x1(k), g.x2(g.n - 1), r0);
        p.sides[3].values[k] = radial_v(g.x1(0), g.x2(k), r0);
        p.sides[1].values[k] = radial_v(g.x1(g.n - 1), g.x2(k), r0);
    }
    return p;
}

ObstacleOptions sor_opts(const Grid& g) {
    ObstacleOptions o;
    o.omega = 2.0 / (1.0 + std::sin(M_PI * g.h()));
    return o;
}

double contact_radius_error(const ObstacleSolution& sol, double r0) {
    const Grid& g = sol.v.grid;
    double worst = 0.0;
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
            const double rho = std::hypot(g.x1(i) - 0.5, g.x2(j) - 0.5);
            if (sol.contact[g.index(i, j)])
                worst = std::max(worst, rho - r0);
            else
                worst = std::max(worst, r0 - rho);
        }
    return worst;
}

// profile-consistent synthetic samples: lap = 3 - (3r-2R)/(r + j/f)
RaySamples profile_samples(double j, double f, double R, double gdot,
                           double neumann, int intervals) {
    RaySamples s;
    s.j = j;
    s.f_xi = f;
    s.gdot = gdot;
    s.R = R;
    s.neumann = neumann;
    for (int i = 0; i <= intervals; ++i) {
        const double r = R * i / intervals;
        s.r.push_back(r);
        s.lap.push_back(3.0 - (3.0 * r - 2.0 * R) / (r + j / f));
    }
    return s;
}

}  // namespace

int main() {
    Suite suite;
    const std::vector<double> scan_a = {0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
    const std::vector<double> mass_a = {0.0, 0.5, 1.0, 2.5};
    const int n = 129;
    const double h = 1.0 / (n - 1);

    // -----------------------------------------------------------------------
    // shared heavy artifacts
    std::map<double, Solved> scan;
    for (double a : scan_a) scan.emplace(a, solve_at(a, n, 1e-7, 6000000));
    const Solved& direct25 = scan.at(2.5);

    std::fprintf(stderr, "[solve] a=0 n=%d obstacle specialization ...\n", n);
    const double t_a0 = now_s();
    Grid g129 = make_grid(0.0, n);
    ObstacleSolution a0 = solve_a0(g129, sor_opts(g129));
    const double a0_seconds = now_s() - t_a0;
    std::fprintf(stderr, "[solve] solve_a0: conv=%d iters=%d %.1fs\n",
                 a0.converged, a0.iterations, a0_seconds);

    // mass balance refinements: the measured total is a quadrature identity,
    // so the n=257 runs only need honest convergence, not tight feasibility
    std::map<double, Solved> fine;
    for (double a : mass_a)
        fine.emplace(a, solve_at(a, 257, 1e-4, 8000000, 1e-7));

    std::fprintf(stderr, "[fit] a=2.5 n=%d ...\n", n);
    const double t_fit = now_s();
    FitOptions fopt;
    FitResult fit = fit_free_boundary(make_grid(2.5, n), 2.5, fopt);
    std::fprintf(stderr, "[fit] objective=%.4f evals=%d %.1fs\n", fit.objective,
                 fit.evaluations, now_s() - t_fit);
    // re-assemble the winner with a finer ODE step: the corner-slope check
    // below needs the profile at better than the search-time 1e-3 resolution
    AssembleOptions fine_ao;
    fine_ao.ode_step = 1e-4;
    const CandidateSolution cand =
        assemble_candidate(make_grid(2.5, n), fit.candidate.theta0,
                           fit.candidate.h0, fit.candidate.r_knots, fine_ao);

    const Solved coarse25 = solve_at(2.5, 65, 1e-7, 2000000);

    // -----------------------------------------------------------------------
    // 1. a=0 exclusion set, both solvers, under two minutes each
    {
        const Solved& m0 = scan.at(0.0);
        std::vector<std::array<double, 2>> za, zm;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                if (a0.contact[g129.index(i, j)])
                    za.push_back({g129.x1(i), g129.x2(j)});
                if (m0.masks.labels[g129.index(i, j)] == OMEGA0)
                    zm.push_back({g129.x1(i), g129.x2(j)});
            }
        const double haus = hausdorff(za, zm);
        const double area_a = node_area(g129, [&](int i, int j) {
            return a0.contact[g129.index(i, j)] != 0;
        });
        const double area_m = node_area(g129, [&](int i, int j) {
            return m0.masks.labels[g129.index(i, j)] == OMEGA0;
        });
        const bool ok = a0.converged && m0.res.converged && haus <= 3.0 * h &&
                        std::abs(area_a - 1.0 / 3.0) <= 0.01 &&
                        std::abs(area_m - 1.0 / 3.0) <= 0.01 &&  // 3% of 1/3
                        a0_seconds < 120.0 && m0.seconds < 120.0;
        suite.criterion(
            1, ok,
            fmt("a=0 zero sets agree: hausdorff=%.4f (<=%.4f), areas %.4f/%.4f "
                "(1/3 +- 3%%), runtimes %.0fs/%.0fs (<120s)",
                haus, 3.0 * h, area_a, area_m, a0_seconds, m0.seconds));
    }

    // -----------------------------------------------------------------------
    // 2. mass balance across a, tightening at n=257
    {
        bool ok = true;
        double worst129 = 1.0, worst257 = 1.0;
        for (double a : mass_a) {
            const double m129 = sigma_mass_balance(scan.at(a).res.u).total;
            const double m257 = sigma_mass_balance(fine.at(a).res.u).total;
            ok = ok && scan.at(a).res.converged && fine.at(a).res.converged;
            ok = ok && m129 >= 0.98 && m129 <= 1.02;
            ok = ok && m257 >= 0.995 && m257 <= 1.005;
            if (std::abs(m129 - 1) > std::abs(worst129 - 1)) worst129 = m129;
            if (std::abs(m257 - 1) > std::abs(worst257 - 1)) worst257 = m257;
        }
        suite.criterion(2, ok,
                        fmt("sigma totals: worst %.6f at n=129 (in [0.98,1.02]), "
                            "worst %.6f at n=257 (in [0.995,1.005])",
                            worst129, worst257));
    }

    // -----------------------------------------------------------------------
    // 3. median Poisson residual on detected Omega2
    {
        bool ok = true;
        double worst = 0.0;
        double worst_a = 0.0;
        for (double a : scan_a) {
            const double med =
                median_poisson_residual(scan.at(a).res.u, scan.at(a).masks);
            if (med > worst) worst = med, worst_a = a;
            ok = ok && med <= 10.0 * h;
        }
        suite.criterion(3, ok,
                        fmt("median |lap u - 3| on Omega2: worst %.4f at a=%g "
                            "(<= 10h = %.4f)",
                            worst, worst_a, 10.0 * h));
    }

    // -----------------------------------------------------------------------
    // 4. Neumann sign away from the corners
    {
        bool ok = true;
        double worst = 0.0, worst_a = 0.0;
        for (double a : scan_a) {
            const double m = neumann_min_noncorner(scan.at(a).res.u);
            if (m < worst) worst = m, worst_a = a;
            ok = ok && m >= -5.0 * h;
        }
        suite.criterion(
            4, ok,
            fmt("min non-corner (Du-x).n: worst %.4f at a=%g (>= -5h = %.4f)",
                worst, worst_a, -5.0 * h));
    }

    // -----------------------------------------------------------------------
    // 5. regime trichotomy over the scan, blunt-ray geometry in regime C
    {
        bool ok = true;
        std::string table;
        for (double a : scan_a) {
            const char r = scan.at(a).regime;
            table += fmt("%g:%c ", a, r);
            // A must occur exactly at a=0; blunt bunching must be flagged at
            // a=2.5 and a=3.0.  Intermediate regimes are reported, not pinned.
            if (a == 0.0) ok = ok && r == 'A';
            else if (a >= 2.5) ok = ok && r == 'C';
            else ok = ok && r != 'A';
        }
        // blunt witnesses: rays reaching the symmetry diagonal
        std::string blunt_note;
        for (double a : {2.5, 3.0}) {
            const Solved& s = scan.at(a);
            int witnesses = 0;
            for (const Ray& r : s.rays.rays) {
                if (r.R < 3.0 * h) continue;
                const double t1 = r.foot[0] + r.R * r.xi[0];
                const double t2 = r.foot[1] + r.R * r.xi[1];
                // a blunt witness reaches the symmetry diagonal: its leaf
                // either ends within two cells of it or crosses it outright
                const bool touches = std::abs(t1 - t2) <= 2.0 * h;
                const bool crosses =
                    (r.foot[0] - r.foot[1]) * (t1 - t2) < 0.0;
                if (!touches && !crosses) continue;
                ++witnesses;
                const bool west = std::abs(r.foot[0] - a) <= 2.0 * h;
                const bool south = std::abs(r.foot[1] - a) <= 2.0 * h;
                if (blunt_gap(r.theta) > 0.05 || !(west || south)) {
                    ok = false;
                    blunt_note += fmt(" bad-ray(a=%g theta=%.3f foot=%.2f,%.2f)",
                                      a, r.theta, r.foot[0], r.foot[1]);
                }
            }
            if (witnesses == 0) {
                ok = false;
                blunt_note += fmt(" no-blunt-witness(a=%g)", a);
            }
        }
        suite.criterion(5, ok,
                        "regimes " + table +
                            "(want A at 0, C at 2.5/3.0); blunt rays at "
                            "-pi/4 +- 0.05 with west/south feet" +
                            blunt_note);
    }

    // -----------------------------------------------------------------------
    // 6. fitted exclusion hypotenuse against the closed form s(2.5)
    {
        const double s_closed = blunt_zone(2.5).s;
        double hyp = 0.0;
        for (const auto& v : cand.omega0_polygon)
            hyp = std::max(hyp, v[0] + v[1]);
        const bool ok = cand.blunt &&
                        std::abs(s_closed - 5.18925479) <= 1e-5 &&
                        std::abs(hyp - s_closed) <= 5.0 * h;
        suite.criterion(6, ok,
                        fmt("fitted Omega0 hypotenuse offset %.5f vs s(2.5)=%.5f "
                            "(|diff|=%.5f <= 5h=%.5f)",
                            hyp, s_closed, std::abs(hyp - s_closed), 5.0 * h));
    }

    // -----------------------------------------------------------------------
    // 7. ODE step study and the R^2 = 2 h' d identity
    {
        auto constR = [](double) { return 0.3; };
        LeafProfile coarse = integrate_slope_el(2.5, -kPi4, 3.0, 0.3, constR, 1e-3);
        LeafProfile oracle = integrate_slope_el(2.5, -kPi4, 3.0, 0.3, constR, 1e-6);
        const double dm = std::abs(coarse.m.back() - oracle.m.back());
        const double dmp = std::abs(coarse.mp.back() - oracle.mp.back());
        const double dh = std::abs(coarse.h.back() - oracle.h.back());
        const double db = std::abs(coarse.b.back() - oracle.b.back());
        // h' from a fourth-order central difference so the identity is probed
        // at the integrator's accuracy, not the differentiation stencil's
        double worst_id = 0.0;
        const double dt = coarse.theta[1] - coarse.theta[0];
        for (int k = 2; k + 2 < coarse.size(); ++k) {
            const double hp = (-coarse.h[k + 2] + 8.0 * coarse.h[k + 1] -
                               8.0 * coarse.h[k - 1] + coarse.h[k - 2]) /
                              (12.0 * dt);
            worst_id = std::max(worst_id, std::abs(coarse.R[k] * coarse.R[k] -
                                                   2.0 * hp * coarse.d(k)));
        }
        const bool ok = dm <= 1e-8 && dmp <= 1e-8 && dh <= 1e-8 && db <= 1e-8 &&
                        worst_id <= 1e-8;
        suite.criterion(7, ok,
                        fmt("step 1e-3 vs 1e-6 endpoint diffs m=%.1e m'=%.1e "
                            "h=%.1e b=%.1e; worst |R^2-2h'd|=%.1e (all <= 1e-8)",
                            dm, dmp, dh, db, worst_id));
    }

    // -----------------------------------------------------------------------
    // 8. manufactured obstacle problem, radius and convergence order
    {
        const double r0 = 0.25;
        Grid ga = make_grid(0.0, 129), gb = make_grid(0.0, 257);
        ObstacleSolution sa = solve_obstacle(radial_problem(ga, r0), sor_opts(ga));
        ObstacleSolution sb = solve_obstacle(radial_problem(gb, r0), sor_opts(gb));
        double sup[2] = {0.0, 0.0};
        const Grid* gs[2] = {&ga, &gb};
        const ObstacleSolution* ss[2] = {&sa, &sb};
        for (int t = 0; t < 2; ++t)
            for (int i = 0; i < gs[t]->n; ++i)
                for (int j = 0; j < gs[t]->n; ++j)
                    sup[t] = std::max(sup[t],
                                      std::abs(ss[t]->v.at(i, j) -
                                               radial_v(gs[t]->x1(i),
                                                        gs[t]->x2(j), r0)));
        const double order = std::log2(sup[0] / sup[1]);
        const double rad_a = contact_radius_error(sa, r0);
        const double rad_b = contact_radius_error(sb, r0);
        const bool ok = sa.converged && sb.converged && rad_a <= 2.0 * ga.h() &&
                        rad_b <= 2.0 * gb.h() && order >= 1.8;
        suite.criterion(8, ok,
                        fmt("contact radius err %.4f/%.4f (<= 2h), sup err "
                            "%.2e -> %.2e, order %.2f (>= 1.8)",
                            rad_a, rad_b, sup[0], sup[1], order));
    }

    // -----------------------------------------------------------------------
    // 9. leafwise moment identities on extracted tame rays + dependence
    {
        auto families = make_leaf_families(direct25.rays.rays);
        std::vector<double> m0, m1;
        for (const auto& fam : families)
            for (int k = 0; k < fam.size(); ++k) {
                if (fam.f_xi[k] <= 0.3 || blunt_gap(fam.theta[k]) <= 0.05)
                    continue;
                const auto mm = moment_residuals(fam, k, direct25.res.u);
                m0.push_back(std::abs(mm[0]));
                m1.push_back(std::abs(mm[1]));
            }
        const double med0 = median_abs(m0), med1 = median_abs(m1);

        // res_neumann = 4 res1 / R - 2 res0 whenever the laplacian follows
        // the leaf profile, independent of the boundary data
        std::mt19937 rng(20260827);
        std::uniform_real_distribution<double> U(0.1, 2.0);
        double worst_dep = 0.0;
        for (int trial = 0; trial < 400; ++trial) {
            const double j = U(rng), f = U(rng), R = U(rng), gd = U(rng);
            const double N = U(rng) - 1.0;
            const LeafResiduals r =
                ray_residuals(profile_samples(j, f, R, gd, N, 2 * (2 + trial % 7)));
            const double dep = 4.0 * r.moment1 / R - 2.0 * r.moment0;
            worst_dep = std::max(worst_dep,
                                 std::abs(r.neumann - dep) /
                                     std::max(1.0, std::abs(r.neumann)));
        }
        const bool ok = m0.size() >= 5 && med0 <= 10.0 * h && med1 <= 10.0 * h &&
                        worst_dep <= 1e-12;
        suite.criterion(9, ok,
                        fmt("tame-ray moment medians %.4f/%.4f over %zu rays "
                            "(<= 10h = %.4f); synthetic dependence %.1e (<= 1e-12)",
                            med0, med1, m0.size(), 10.0 * h, worst_dep));
    }

    // -----------------------------------------------------------------------
    // 10. stingray tail monotonicity on the fitted profile
    {
        const StingrayCurve c = stingray_curve(cand.fan.profile);
        bool positive = !c.slope.empty();
        bool increasing = true;
        for (size_t k = 0; k < c.slope.size(); ++k)
            positive = positive && c.slope[k] > 0.0;
        for (size_t k = 1; k + 1 < c.slope.size(); ++k)
            increasing = increasing && c.slope[k] > c.slope[k - 1];
        const double at_corner = c.slope.empty() ? 0.0 : c.slope.front();
        const bool ok = positive && increasing &&
                        std::abs(at_corner - 1.0) <= 1e-6;
        suite.criterion(10, ok,
                        fmt("fitted-tail slopes positive=%d strictly "
                            "increasing=%d, slope(-pi/4)=%.8f (= 1 +- 1e-6)",
                            (int)positive, (int)increasing, at_corner));
    }

    // -----------------------------------------------------------------------
    // 11. assembled candidate against the direct minimizer
    {
        double sup = 0.0;
        for (int k = 0; k < g129.num_nodes(); ++k)
            sup = std::max(sup, std::abs(cand.u.values[k] -
                                         direct25.res.u.values[k]));
        const double de = energy(cand.u) - direct25.res.energy;
        const bool ok = sup <= 10.0 * h && de <= 10.0 * h;
        suite.criterion(11, ok,
                        fmt("fitted vs direct at a=2.5: sup diff %.4f "
                            "(<= 10h = %.4f), energy excess %.4f (<= 10h)",
                            sup, 10.0 * h, de));
    }

    // -----------------------------------------------------------------------
    // property substitutes for the non-reproducible paper results
    {
        const size_t fb65 = free_boundary(coarse25.masks).points.size();
        const size_t fb129 = free_boundary(direct25.masks).points.size();
        const bool ok = fb65 > 0 && fb129 <= 3 * fb65;
        suite.property("free-boundary growth", ok,
                       fmt("cell count %zu -> %zu under n doubling, ratio %.2f "
                           "(<= 3, sublinear in n^2)",
                           fb65, fb129, (double)fb129 / fb65));
    }
    {
        auto families = make_leaf_families(direct25.rays.rays);
        bool ok = false;
        std::string note;
        for (const auto& fam : families) {
            if (fam.size() < 5) continue;
            ok = true;
            const RayProfile rp = ray_diameter_profile(fam.rays);
            std::set<int> near;
            for (int ix : rp.local_maxima) {
                near.insert(ix - 1);
                near.insert(ix);
                near.insert(ix + 1);
            }
            double away = 0.0;
            for (size_t k = 0; k + 1 < rp.R.size(); ++k)
                if (!near.count((int)k) && !near.count((int)k + 1))
                    away = std::max(away, std::abs(rp.R[k + 1] - rp.R[k]));
            ok = ok && rp.local_maxima.size() <= 2 && away <= 10.0 * h;
            note += fmt(" fam(%d rays, %zu maxima, away-jump %.4f)",
                        fam.size(), rp.local_maxima.size(), away);
        }
        suite.property("R-profile shape", ok,
                       fmt("per family <= 2 local maxima and jumps <= 10h = "
                           "%.4f away from them:%s",
                           10.0 * h, note.c_str()));
    }

    return suite.finish();
}
