#include "monopolist/assembler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <stdexcept>

namespace monopolist {

namespace {

double side_normal_derivative(const Grid& g, int side, int i, int j) {
    // (Dv - x).n = 0  =>  dv/dn = x.n on the distortion-free sides
    switch (side) {
        case 0: return -g.x2(j);
        case 1: return g.x1(i);
        case 2: return g.x2(j);
        default: return -g.x1(i);
    }
}

}  // namespace

ScalarField solve_mixed_bvp(const std::vector<char>& omega2,
                            const ScalarField& dirichlet,
                            const std::array<bool, 4>& neumann_sides,
                            const MixedBvpOptions& opts) {
    const Grid& g = dirichlet.grid;
    const int n = g.n;
    const double h = g.h();
    if ((int)omega2.size() != g.num_nodes())
        throw std::invalid_argument("mask size mismatch");

    bool anchored = false;
    for (int k = 0; k < g.num_nodes() && !anchored; ++k) {
        if (!omega2[k]) continue;
        const int i = k / n, j = k % n;
        anchored = (i > 0 && !omega2[g.index(i - 1, j)]) ||
                   (i + 1 < n && !omega2[g.index(i + 1, j)]) ||
                   (j > 0 && !omega2[g.index(i, j - 1)]) ||
                   (j + 1 < n && !omega2[g.index(i, j + 1)]);
    }
    if (!anchored)
        throw std::invalid_argument(
            "mixed BVP without Dirichlet contact is singular");

    ScalarField v = dirichlet;
    const double omega =
        opts.omega > 0 ? opts.omega : 2.0 / (1.0 + std::sin(M_PI * h));

    // neighbor value, or the Neumann ghost across the square edge:
    // ghost = mirror + 2h * dv/dn
    auto neighbor = [&](const ScalarField& f, int i, int j, int di, int dj,
                        bool& ok) -> double {
        const int ii = i + di, jj = j + dj;
        if (ii >= 0 && ii < n && jj >= 0 && jj < n) {
            ok = true;
            return f.at(ii, jj);
        }
        const int side = dj < 0 ? 0 : di > 0 ? 1 : dj > 0 ? 2 : 3;
        if (!neumann_sides[side]) {
            ok = false;
            return 0.0;
        }
        ok = true;
        return f.at(i - di, j - dj) +
               2.0 * h * side_normal_derivative(g, side, i, j);
    };

    auto sweep_or_residual = [&](bool sweep) {
        double res = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const int k = g.index(i, j);
                if (!omega2[k]) continue;
                double sum = 0.0;
                bool ok = true, all_ok = true;
                sum += neighbor(v, i, j, -1, 0, ok), all_ok &= ok;
                sum += neighbor(v, i, j, 1, 0, ok), all_ok &= ok;
                sum += neighbor(v, i, j, 0, -1, ok), all_ok &= ok;
                sum += neighbor(v, i, j, 0, 1, ok), all_ok &= ok;
                if (!all_ok)
                    throw std::invalid_argument(
                        "mask reaches a side with no boundary condition");
                if (sweep) {
                    const double gs = (sum - 3.0 * h * h) / 4.0;
                    v.values[k] += omega * (gs - v.values[k]);
                } else {
                    res = std::max(
                        res, std::abs((sum - 4.0 * v.values[k]) / (h * h) -
                                      3.0));
                }
            }
        return res;
    };

    for (int it = 0; it < opts.max_iters; ++it) {
        sweep_or_residual(true);
        if (it % 50 == 49 && sweep_or_residual(false) <= opts.tol) break;
    }
    return v;
}

std::array<double, 2> CandidateSolution::piece_gradient(double x1,
                                                        double x2) const {
    const double d = x1 + x2;
    if (blunt) {
        if (d <= s0 + 1e-12) return {0.0, 0.0};
        if (d <= s1 + 1e-12) {
            const double up = strip.slope(d);
            return {up, up};
        }
    }
    if (has_fan) {
        double th, r;
        if (x2 >= x1 && fan.locate(x1, x2, th, r)) return fan.gradient(x1, x2);
        if (x2 < x1 && fan.locate(x2, x1, th, r)) {
            auto gr = fan.gradient(x2, x1);
            return {gr[1], gr[0]};
        }
    }
    return {0.0, 0.0};
}

CandidateSolution assemble_candidate(const Grid& grid, double theta0,
                                     double h0, std::vector<double> r_knots,
                                     const AssembleOptions& opts) {
    const double a = grid.a;
    if (!(theta0 >= -M_PI / 4 - 1e-12 && theta0 < 0.0))
        throw std::invalid_argument("theta0 outside [-pi/4, 0)");
    if (!(h0 > a && h0 < a + 1.0))
        throw std::invalid_argument("h0 outside (a, a+1)");
    if (r_knots.empty()) throw std::invalid_argument("no R knots");
    for (double r : r_knots)
        if (!(r >= 0.0 && r < std::sqrt(0.5)))
            throw std::invalid_argument("R knot outside [0, sqrt(2)/2)");

    CandidateSolution c;
    c.a = a;
    c.grid = grid;
    c.theta0 = theta0;
    c.h0 = h0;

    const BluntZone bz = blunt_zone(a);
    c.blunt = bz.blunt_expected && theta0 <= -M_PI / 4 + 1e-9;
    if (c.blunt) {
        c.s0 = bz.s + opts.s0_offset;
        c.s1 = a + h0;
        if (c.s1 <= c.s0 + 1e-9)
            throw std::runtime_error("geometry overlap: empty blunt strip");
        c.strip = integrate_strip(a, c.s0, c.s1, opts.ode_step);
        r_knots[0] = (h0 - a) / std::sqrt(2.0);  // strip half-chord
    }
    c.r_knots = r_knots;

    const int K = (int)r_knots.size();
    std::vector<double> kt(K);
    for (int q = 0; q < K; ++q)
        kt[q] = K == 1 ? theta0 : theta0 + (0.0 - theta0) * q / (K - 1);
    PiecewiseLinear rfun{kt, r_knots};

    c.has_fan = r_knots[0] > 1e-12;
    if (c.has_fan) {
        const double b0 = c.blunt ? c.strip.value(c.s1) : 0.0;
        const double mp0 = c.blunt ? std::sqrt(2.0) * c.strip.slope(c.s1) : 0.0;
        LeafProfile prof =
            integrate_slope_el(a, theta0, h0, r_knots[0],
                               [&](double th) { return rfun(th); },
                               opts.ode_step, b0, mp0);
        for (int q = 0; q < prof.size(); ++q) {
            const double tip1 = a + prof.R[q] * std::cos(prof.theta[q]);
            const double tip2 =
                prof.h[q] + prof.R[q] * std::sin(prof.theta[q]);
            if (tip2 < tip1 - 1e-9)
                throw std::runtime_error(
                    "geometry overlap: fan crosses the diagonal");
        }
        c.fan = u1_from_profile(prof);
    }

    // half-planes bounding the tapered exclusion corner: the theta0 ray and
    // its diagonal mirror lie in its boundary
    const double nx = -std::sin(theta0), ny = std::cos(theta0);
    auto in_omega0 = [&](double x1, double x2) {
        if (c.blunt) return x1 + x2 <= c.s0 + 1e-12;
        return (x1 - a) * nx + (x2 - h0) * ny <= 1e-12 &&
               (x2 - a) * nx + (x1 - h0) * ny <= 1e-12;
    };

    const int n = grid.n;
    c.region.assign(grid.num_nodes(), 2);
    c.u = ScalarField(grid);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double x1 = grid.x1(i), x2 = grid.x2(j);
            const int k = grid.index(i, j);
            if (in_omega0(x1, x2)) {
                c.region[k] = 0;
                continue;
            }
            if (c.blunt && x1 + x2 <= c.s1 + 1e-12) {
                c.region[k] = 1;
                c.u.values[k] = c.strip.value(x1 + x2);
                continue;
            }
            if (c.has_fan) {
                if (x2 >= x1 && c.fan.contains(x1, x2)) {
                    c.region[k] = 1;
                    c.u.values[k] = c.fan.value(x1, x2);
                    continue;
                }
                if (x2 < x1 && c.fan.contains(x2, x1)) {
                    c.region[k] = 1;
                    c.u.values[k] = c.fan.value(x2, x1);
                    continue;
                }
            }
        }

    std::vector<char> mask(grid.num_nodes(), 0);
    for (int k = 0; k < grid.num_nodes(); ++k) mask[k] = c.region[k] == 2;
    ScalarField u2 =
        solve_mixed_bvp(mask, c.u, {true, true, true, true}, opts.bvp);
    for (int k = 0; k < grid.num_nodes(); ++k)
        if (mask[k]) c.u.values[k] = u2.values[k];

    // the construction is mirror symmetric; average out the sweep-order bias
    // of the SOR solve
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < i; ++j) {
            const double m =
                0.5 * (c.u.at(i, j) + c.u.at(j, i));
            c.u.at(i, j) = m;
            c.u.at(j, i) = m;
        }

    if (c.blunt) {
        c.omega0_polygon = {{a, a}, {a, c.s0 - a}, {c.s0 - a, a}};
    } else {
        const double t =
            (-a * std::sin(theta0) + h0 * std::cos(theta0)) / (ny + (-nx));
        c.omega0_polygon = {{a, a}, {a, h0}, {t, t}, {h0, a}};
    }
    return c;
}

namespace {

// max-form report per the duality conditions, plus a root-mean-square
// aggregate of the same samples (the outer fit minimizes the smooth RMS; the
// max of a staircase-sampled seam is too jagged for line searches)
ResidualReport seam_residuals(const CandidateSolution& c, double* rms) {
    const Grid& g = c.grid;
    const int n = g.n;
    const double h = g.h();
    ResidualReport rep;
    double sq = 0.0;
    int count = 0;

    // one-sided derivative on the Omega2 side, along the axis from the
    // Omega2 node k toward the seam
    auto one_sided = [&](int i, int j, int di, int dj) {
        const int i1 = i - di, j1 = j - dj, i2 = i - 2 * di, j2 = j - 2 * dj;
        const bool deep = i2 >= 0 && i2 < n && j2 >= 0 && j2 < n &&
                          c.region[g.index(i2, j2)] == 2 &&
                          c.region[g.index(i1, j1)] == 2;
        if (deep)
            return (3.0 * c.u.at(i, j) - 4.0 * c.u.at(i1, j1) +
                    c.u.at(i2, j2)) /
                   (2.0 * h);
        if (i1 >= 0 && i1 < n && j1 >= 0 && j1 < n)
            return (c.u.at(i, j) - c.u.at(i1, j1)) / h;
        return 0.0;
    };

    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (c.region[g.index(i, j)] != 2) continue;
            const int dirs[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
            for (auto& d : dirs) {
                const int ii = i + d[0], jj = j + d[1];
                if (ii < 0 || ii >= n || jj < 0 || jj >= n) continue;
                const int other = c.region[g.index(ii, jj)];
                if (other == 2) continue;
                const double du2 = one_sided(i, j, d[0], d[1]);
                const auto pg = c.piece_gradient(g.x1(ii), g.x2(jj));
                const double dpc = pg[0] * d[0] + pg[1] * d[1];
                const double jump = std::abs(du2 - dpc);
                rep.r_c1 = std::max(rep.r_c1, jump);
                sq += jump * jump;
                ++count;
                if (other == 1) {
                    rep.r_interface = std::max(rep.r_interface, jump);
                } else {
                    rep.r_exclusion = std::max(rep.r_exclusion,
                                               std::abs(du2));
                    sq += du2 * du2;
                    ++count;
                }
            }
        }

    BoundaryTrace tr = boundary_normal_residual(c.u);
    for (const auto& nd : tr.nodes) {
        if (nd.corner) continue;
        if (c.region[g.index(nd.i, nd.j)] != 2) continue;
        rep.r_fixed = std::max(rep.r_fixed, std::abs(nd.value));
        sq += nd.value * nd.value;
        ++count;
    }
    if (rms) *rms = count > 0 ? std::sqrt(sq / count) : 0.0;
    return rep;
}

}  // namespace

ResidualReport free_boundary_residuals(const CandidateSolution& c) {
    return seam_residuals(c, nullptr);
}

FitResult fit_free_boundary(const Grid& grid, double a,
                            const FitOptions& opts) {
    if (!(a > 0.0)) throw std::invalid_argument("fit needs a > 0");
    const BluntZone bz = blunt_zone(a);
    const int K = std::max(2, opts.knots);

    // parameter vector: theta0, h0, K knots (knot 0 is overridden by the
    // strip geometry in the blunt branch)
    std::vector<double> p(2 + K), lo(2 + K), hi(2 + K);
    lo[0] = -M_PI / 4;
    hi[0] = -0.02;
    lo[1] = a + 0.02;
    hi[1] = a + 0.95;
    for (int q = 0; q < K; ++q) {
        lo[2 + q] = 0.0;
        hi[2 + q] = 0.68;
    }
    p[0] = bz.blunt_expected ? -M_PI / 4 : -M_PI / 8;
    p[1] = a + (bz.blunt_expected
                    ? std::min(0.9, (bz.s - 2.0 * a) + 0.4)
                    : 0.4);
    // the ODE foot distance starts at a, so admissible profiles have
    // R = O(a) near the sharp end of the regime range
    const double cap = bz.blunt_expected ? 0.3 : std::min(0.3, 0.1 * a);
    for (int q = 0; q < K; ++q)
        p[2 + q] = cap * (1.0 - (double)q / K);
    // the fan closes at theta -> 0: the profile shrinks to a point there, so
    // the last knot is held at zero (a positive value leaves a spurious
    // gradient jump along the fan's upper edge and its mirror)
    p[2 + K - 1] = 0.0;

    // the line search only ranks candidates; it never needs the last two
    // digits of the potential, so relax the inner linear-solver tolerance
    AssembleOptions ao = opts.assemble;
    ao.bvp.tol = std::max(ao.bvp.tol, 1e-8);

    FitResult out;
    auto evaluate = [&](const std::vector<double>& q)
        -> std::pair<double, std::optional<CandidateSolution>> {
        ++out.evaluations;
        try {
            CandidateSolution cand = assemble_candidate(
                grid, q[0], q[1], {q.begin() + 2, q.end()}, ao);
            double rms = 0.0;
            seam_residuals(cand, &rms);
            return {rms, std::move(cand)};
        } catch (const std::exception&) {
            return {1e6, std::nullopt};
        }
    };

    auto [best, cand] = evaluate(p);
    double step = opts.initial_step;
    for (int round = 0; round < opts.max_rounds; ++round) {
        for (size_t idx = 0; idx < p.size(); ++idx) {
            if (bz.blunt_expected && (idx == 0 || idx == 2))
                continue;  // theta0 pinned to -pi/4, knot 0 forced
            if (idx == p.size() - 1) continue;  // fan closes at theta = 0
            double a1 = std::max(lo[idx], p[idx] - step);
            double b1 = std::min(hi[idx], p[idx] + step);
            const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
            double x1 = b1 - gr * (b1 - a1), x2 = a1 + gr * (b1 - a1);
            auto probe = [&](double x) {
                std::vector<double> q = p;
                q[idx] = x;
                return evaluate(q).first;
            };
            double f1 = probe(x1), f2 = probe(x2);
            for (int it = 0; it < 6; ++it) {
                if (f1 <= f2) {
                    b1 = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = b1 - gr * (b1 - a1);
                    f1 = probe(x1);
                } else {
                    a1 = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = a1 + gr * (b1 - a1);
                    f2 = probe(x2);
                }
            }
            const double xb = f1 <= f2 ? x1 : x2;
            std::vector<double> q = p;
            q[idx] = xb;
            auto [fb, cb] = evaluate(q);
            if (fb < best && cb) {
                best = fb;
                cand = std::move(cb);
                p = q;
            }
        }
        out.trace.push_back(best);
        step *= 0.5;
    }
    if (!cand) throw std::runtime_error("no admissible candidate");

    // re-assemble the winner at the caller's full tolerance
    out.candidate = assemble_candidate(grid, p[0], p[1],
                                       {p.begin() + 2, p.end()},
                                       opts.assemble);
    out.residuals = free_boundary_residuals(out.candidate);
    out.objective = out.residuals.objective(opts.weights);
    return out;
}

void write_candidate_bundle(const CandidateSolution& c,
                            const ResidualReport& r, const std::string& dir) {
    std::filesystem::create_directories(dir);
    write_field(c.u, dir + "/u.csv");

    std::FILE* fp = std::fopen((dir + "/regions.csv").c_str(), "w");
    if (!fp) throw std::runtime_error("cannot open " + dir + "/regions.csv");
    std::fprintf(fp, "# monopolist-field v1\n");
    std::fprintf(fp, "n=%d a=%.17g\n", c.grid.n, c.grid.a);
    for (int i = 0; i < c.grid.n; ++i)
        for (int j = 0; j < c.grid.n; ++j)
            std::fprintf(fp, "%d%c", c.region[c.grid.index(i, j)],
                         j + 1 == c.grid.n ? '\n' : ',');
    std::fclose(fp);

    fp = std::fopen((dir + "/omega0.json").c_str(), "w");
    if (!fp) throw std::runtime_error("cannot open " + dir + "/omega0.json");
    std::fprintf(fp, "{\"polygon\":[");
    for (size_t q = 0; q < c.omega0_polygon.size(); ++q)
        std::fprintf(fp, "%s[%.12g,%.12g]", q ? "," : "",
                     c.omega0_polygon[q][0], c.omega0_polygon[q][1]);
    std::fprintf(fp, "]}\n");
    std::fclose(fp);

    fp = std::fopen((dir + "/residuals.json").c_str(), "w");
    if (!fp)
        throw std::runtime_error("cannot open " + dir + "/residuals.json");
    std::fprintf(fp,
                 "{\"r_interface\":%.12g,\"r_exclusion\":%.12g,"
                 "\"r_fixed\":%.12g,\"r_c1\":%.12g,\"objective\":%.12g}\n",
                 r.r_interface, r.r_exclusion, r.r_fixed, r.r_c1,
                 r.objective());
    std::fclose(fp);
}

}  // namespace monopolist
