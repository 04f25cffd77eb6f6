#include "monopolist/regions.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace monopolist {

int RegionMasks::count(RegionLabel l) const {
    int c = 0;
    for (int v : labels) c += (v == l);
    return c;
}

RegionMasks classify_regions(const ScalarField& u, Thresholds thr) {
    const Grid& g = u.grid;
    if (thr.eps0 <= 0.0) thr.eps0 = 10.0 * g.h() * g.h();

    RegionMasks masks;
    masks.grid = g;
    masks.used = thr;
    masks.labels.assign(g.num_nodes(), OMEGA2);
    masks.lmin.assign(g.num_nodes(), 0.0);
    masks.lmax.assign(g.num_nodes(), 0.0);

    TensorField d2 = hessian(u);
    int omega2 = 0, bad = 0;
    for (int k = 0; k < g.num_nodes(); ++k) {
        auto ev = tensor_eigenvalues(d2, k);
        masks.lmin[k] = ev[0];
        masks.lmax[k] = ev[1];
        if (u.values[k] < thr.eps0) {
            masks.labels[k] = OMEGA0;
        } else if (ev[0] < thr.eps1 * std::max(ev[1], 0.0)) {
            masks.labels[k] = OMEGA1;
        } else {
            masks.labels[k] = OMEGA2;
            ++omega2;
            const double lap = d2.d11[k] + d2.d22[k];
            if (std::abs(lap - 3.0) > thr.eps2) ++bad;
        }
    }
    masks.poisson_violation_fraction = omega2 > 0 ? (double)bad / omega2 : 0.0;
    masks.poisson_warning = masks.poisson_violation_fraction > 0.05;
    return masks;
}

namespace {

// CCW boundary walk parameter of the square's nearest side point.
double walk_parameter(const Grid& g, double x1, double x2) {
    const double a = g.a;
    const double dS = x2 - a, dE = a + 1.0 - x1, dN = a + 1.0 - x2, dW = x1 - a;
    const double dmin = std::min({dS, dE, dN, dW});
    if (dmin == dS) return x1 - a;
    if (dmin == dE) return 1.0 + (x2 - a);
    if (dmin == dN) return 2.0 + (a + 1.0 - x1);
    return 3.0 + (a + 1.0 - x2);
}

// Intersection of the line p + s*dir with the square edge nearest to p
// (smallest |s|); falls back to clamping p when the line misses.
std::array<double, 2> project_to_boundary(const Grid& g,
                                          const std::array<double, 2>& p,
                                          const std::array<double, 2>& dir) {
    const double a = g.a, b = g.a + 1.0;
    double best_s = 1e18;
    std::array<double, 2> best{std::clamp(p[0], a, b), std::clamp(p[1], a, b)};
    auto consider = [&](double s) {
        if (std::abs(s) >= std::abs(best_s)) return;
        std::array<double, 2> q{p[0] + s * dir[0], p[1] + s * dir[1]};
        const double tol = 1e-9;
        if (q[0] < a - tol || q[0] > b + tol || q[1] < a - tol || q[1] > b + tol)
            return;
        best_s = s;
        q[0] = std::clamp(q[0], a, b);
        q[1] = std::clamp(q[1], a, b);
        best = q;
    };
    if (std::abs(dir[0]) > 1e-14) {
        consider((a - p[0]) / dir[0]);
        consider((b - p[0]) / dir[0]);
    }
    if (std::abs(dir[1]) > 1e-14) {
        consider((a - p[1]) / dir[1]);
        consider((b - p[1]) / dir[1]);
    }
    return best;
}

std::array<double, 2> outer_normal_at(const Grid& g,
                                      const std::array<double, 2>& q) {
    const double a = g.a, b = g.a + 1.0;
    const double dS = q[1] - a, dE = b - q[0], dN = b - q[1], dW = q[0] - a;
    const double dmin = std::min({dS, dE, dN, dW});
    if (dmin == dS) return {0.0, -1.0};
    if (dmin == dE) return {1.0, 0.0};
    if (dmin == dN) return {0.0, 1.0};
    return {-1.0, 0.0};
}

}  // namespace

RayExtraction extract_rays(const ScalarField& u, const RegionMasks& masks) {
    const Grid& g = u.grid;
    const double h = g.h();
    VectorField du = gradient(u);

    // Median curvature over the bunching nodes; the global max is polluted by
    // the one-sided stencil kinks along the free boundary.
    std::vector<double> scale;
    for (int k = 0; k < g.num_nodes(); ++k)
        if (masks.labels[k] == OMEGA1) scale.push_back(std::abs(masks.lmax[k]));
    double hess_med = 0.0;
    if (!scale.empty()) {
        std::nth_element(scale.begin(), scale.begin() + scale.size() / 2,
                         scale.end());
        hess_med = scale[scale.size() / 2];
    }
    const double tol_g = 1.5 * h * std::max(hess_med, 1.0);

    // Deterministic clustering of gradient values over Omega1 nodes:
    // farthest-point seeding until every node sits within tol_g of a seed
    // (covers the gradient curve evenly, unlike order-dependent greedy
    // chaining), then a few Lloyd rounds.
    struct Cluster {
        double g1 = 0.0, g2 = 0.0;  // means
        std::vector<std::array<double, 2>> pts;
        std::vector<std::array<double, 2>> grads;
    };
    std::vector<Cluster> clusters;
    std::vector<int> nodes;
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j)
            if (masks.labels[g.index(i, j)] == OMEGA1)
                nodes.push_back(g.index(i, j));
    if (!nodes.empty()) {
        std::vector<double> dist(nodes.size(), 1e18);
        size_t next = 0;  // first node lexicographically seeds the cover
        while (true) {
            Cluster c;
            c.g1 = du.c1[nodes[next]];
            c.g2 = du.c2[nodes[next]];
            clusters.push_back(c);
            double far = 0.0;
            for (size_t q = 0; q < nodes.size(); ++q) {
                const double d =
                    std::hypot(du.c1[nodes[q]] - c.g1, du.c2[nodes[q]] - c.g2);
                dist[q] = std::min(dist[q], d);
                if (dist[q] > far) {
                    far = dist[q];
                    next = q;
                }
            }
            if (far <= tol_g) break;
        }
    }
    for (int round = 0; round < 4; ++round) {
        for (auto& c : clusters) {
            c.pts.clear();
            c.grads.clear();
        }
        for (int k : nodes) {
            const double y1 = du.c1[k], y2 = du.c2[k];
            Cluster* home = nullptr;
            double best = 1e18;
            for (auto& c : clusters) {
                const double d = std::hypot(y1 - c.g1, y2 - c.g2);
                if (d < best) {
                    best = d;
                    home = &c;
                }
            }
            home->pts.push_back({g.x1(k / g.n), g.x2(k % g.n)});
            home->grads.push_back({y1, y2});
        }
        for (auto& c : clusters) {
            if (c.pts.empty()) continue;
            c.g1 = c.g2 = 0.0;
            for (auto& y : c.grads) {
                c.g1 += y[0];
                c.g2 += y[1];
            }
            c.g1 /= c.grads.size();
            c.g2 /= c.grads.size();
        }
        std::erase_if(clusters, [](const Cluster& c) { return c.pts.empty(); });
    }

    RayExtraction out;
    for (const auto& c : clusters) {
        if (c.pts.size() < 3) continue;
        // total-least-squares direction: principal axis of the scatter
        double mx = 0.0, my = 0.0;
        for (auto& p : c.pts) {
            mx += p[0];
            my += p[1];
        }
        mx /= c.pts.size();
        my /= c.pts.size();
        double sxx = 0.0, sxy = 0.0, syy = 0.0;
        for (auto& p : c.pts) {
            sxx += (p[0] - mx) * (p[0] - mx);
            sxy += (p[0] - mx) * (p[1] - my);
            syy += (p[1] - my) * (p[1] - my);
        }
        const double tr = sxx + syy, det = sxx * syy - sxy * sxy;
        const double lam = 0.5 * tr + std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
        std::array<double, 2> xi{};
        if (std::abs(sxy) > 1e-14) {
            xi = {lam - syy, sxy};
        } else {
            xi = sxx >= syy ? std::array<double, 2>{1.0, 0.0}
                            : std::array<double, 2>{0.0, 1.0};
        }
        const double norm = std::hypot(xi[0], xi[1]);
        xi[0] /= norm;
        xi[1] /= norm;

        double smin = 1e18, smax = -1e18;
        for (auto& p : c.pts) {
            const double s = (p[0] - mx) * xi[0] + (p[1] - my) * xi[1];
            smin = std::min(smin, s);
            smax = std::max(smax, s);
        }
        std::array<double, 2> e0{mx + smin * xi[0], my + smin * xi[1]};
        std::array<double, 2> e1{mx + smax * xi[0], my + smax * xi[1]};

        auto boundary_gap = [&](const std::array<double, 2>& p) {
            const double a = g.a, b = g.a + 1.0;
            return std::min({p[0] - a, b - p[0], p[1] - a, b - p[1]});
        };
        // nearer end is the candidate foot
        if (boundary_gap(e1) < boundary_gap(e0)) {
            std::swap(e0, e1);
            xi = {-xi[0], -xi[1]};
        }
        Ray r;
        r.nodes = (int)c.pts.size();
        r.grad = {c.g1, c.g2};
        const bool interior_only = boundary_gap(e0) > 2.0 * h;
        r.foot = interior_only ? e0 : project_to_boundary(g, e0, xi);
        r.xi = xi;
        r.theta = std::atan2(xi[1], xi[0]);
        r.R = std::hypot(e1[0] - r.foot[0], e1[1] - r.foot[1]);
        r.t = walk_parameter(g, r.foot[0], r.foot[1]);
        const auto nrm = outer_normal_at(g, r.foot);
        r.neumann = (r.grad[0] - r.foot[0]) * nrm[0] + (r.grad[1] - r.foot[1]) * nrm[1];
        if (interior_only || r.neumann <= 5.0 * h * h)
            out.stray.push_back(r);
        else
            out.rays.push_back(r);
    }
    auto by_t = [](const Ray& a, const Ray& b) { return a.t < b.t; };
    std::sort(out.rays.begin(), out.rays.end(), by_t);
    std::sort(out.stray.begin(), out.stray.end(), by_t);
    return out;
}

FreeBoundary free_boundary(const RegionMasks& masks) {
    const Grid& g = masks.grid;
    FreeBoundary fb;
    auto indicator = [&](int k) {
        return masks.lmin[k] - masks.used.eps1 * std::max(masks.lmax[k], 0.0);
    };
    auto crossing = [&](int k0, int k1, double x0, double y0, double x1,
                        double y1) {
        const int l0 = masks.labels[k0], l1 = masks.labels[k1];
        if (!((l0 == OMEGA1 && l1 == OMEGA2) || (l0 == OMEGA2 && l1 == OMEGA1)))
            return;
        const double f0 = indicator(k0), f1 = indicator(k1);
        double w = 0.5;
        if (std::abs(f1 - f0) > 1e-14) w = std::clamp(f0 / (f0 - f1), 0.0, 1.0);
        fb.points.push_back({x0 + w * (x1 - x0), y0 + w * (y1 - y0)});
    };
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
            if (i + 1 < g.n)
                crossing(g.index(i, j), g.index(i + 1, j), g.x1(i), g.x2(j),
                         g.x1(i + 1), g.x2(j));
            if (j + 1 < g.n)
                crossing(g.index(i, j), g.index(i, j + 1), g.x1(i), g.x2(j),
                         g.x1(i), g.x2(j + 1));
        }
    return fb;
}

RayProfile ray_diameter_profile(const std::vector<Ray>& rays) {
    RayProfile p;
    for (const auto& r : rays) {
        p.t.push_back(r.t);
        p.R.push_back(r.R);
    }
    for (size_t k = 1; k < p.R.size(); ++k)
        p.max_jump = std::max(p.max_jump, std::abs(p.R[k] - p.R[k - 1]));
    for (size_t k = 0; k < p.R.size(); ++k) {
        const bool up = k == 0 || p.R[k] >= p.R[k - 1];
        const bool down = k + 1 == p.R.size() || p.R[k] >= p.R[k + 1];
        if (up && down && p.R.size() > 1) p.local_maxima.push_back((int)k);
    }
    for (size_t k = 1; k < p.R.size(); ++k) {
        const double dt = p.t[k] - p.t[k - 1];
        p.secant_slopes.push_back(dt > 1e-14 ? std::abs(p.R[k] - p.R[k - 1]) / dt
                                             : 0.0);
    }
    return p;
}

void write_labels(const RegionMasks& masks, const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "w");
    if (!fp) throw std::runtime_error("cannot open " + path);
    std::fprintf(fp, "# monopolist-field v1\n");
    std::fprintf(fp, "n=%d a=%.17g\n", masks.grid.n, masks.grid.a);
    for (int i = 0; i < masks.grid.n; ++i)
        for (int j = 0; j < masks.grid.n; ++j)
            std::fprintf(fp, "%d%c", masks.labels[masks.grid.index(i, j)],
                         j + 1 == masks.grid.n ? '\n' : ',');
    std::fclose(fp);
}

std::string rays_to_json(const RayExtraction& rx) {
    std::string s = "{\"rays\":[";
    auto emit = [](const Ray& r) {
        char buf[256];
        std::snprintf(buf, sizeof buf,
                      "{\"foot\":[%.12g,%.12g],\"theta\":%.12g,\"R\":%.12g,"
                      "\"grad\":[%.12g,%.12g]}",
                      r.foot[0], r.foot[1], r.theta, r.R, r.grad[0], r.grad[1]);
        return std::string(buf);
    };
    for (size_t k = 0; k < rx.rays.size(); ++k)
        s += (k ? "," : "") + emit(rx.rays[k]);
    s += "],\"stray\":[";
    for (size_t k = 0; k < rx.stray.size(); ++k)
        s += (k ? "," : "") + emit(rx.stray[k]);
    s += "]}";
    return s;
}

}  // namespace monopolist
