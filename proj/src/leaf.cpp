#include "monopolist/leaf.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace monopolist {

namespace {

struct Fit {
    double value = 0.0, deriv = 0.0;
};

// Least-squares quadratic in (t - t[k]) over up to 5 neighbors; degenerates
// to a secant for short families.
Fit quad_fit(const std::vector<double>& t, const std::vector<double>& y,
             int k) {
    const int n = (int)t.size();
    const int lo = std::max(0, k - 2), hi = std::min(n - 1, k + 2);
    const int m = hi - lo + 1;
    if (m < 2 || t[hi] - t[lo] < 1e-14) return {y[k], 0.0};
    if (m == 2) return {y[k], (y[hi] - y[lo]) / (t[hi] - t[lo])};

    double S1 = 0, S2 = 0, S3 = 0, S4 = 0, b0 = 0, b1 = 0, b2 = 0;
    for (int i = lo; i <= hi; ++i) {
        const double s = t[i] - t[k], s2 = s * s;
        S1 += s;
        S2 += s2;
        S3 += s2 * s;
        S4 += s2 * s2;
        b0 += y[i];
        b1 += y[i] * s;
        b2 += y[i] * s2;
    }
    const double S0 = m;
    const double det = S0 * (S2 * S4 - S3 * S3) - S1 * (S1 * S4 - S3 * S2) +
                       S2 * (S1 * S3 - S2 * S2);
    if (std::abs(det) < 1e-14) {
        const double denom = S0 * S2 - S1 * S1;
        if (std::abs(denom) < 1e-14) return {y[k], 0.0};
        const double c1 = (S0 * b1 - S1 * b0) / denom;
        return {(b0 - c1 * S1) / S0, c1};
    }
    const double c0 = (b0 * (S2 * S4 - S3 * S3) - S1 * (b1 * S4 - S3 * b2) +
                       S2 * (b1 * S3 - S2 * b2)) /
                      det;
    const double c1 = (S0 * (b1 * S4 - S3 * b2) - b0 * (S1 * S4 - S3 * S2) +
                       S2 * (S1 * b2 - b1 * S2)) /
                      det;
    return {c0, c1};
}

double cross(const std::array<double, 2>& a, const std::array<double, 2>& b) {
    return a[0] * b[1] - a[1] * b[0];
}

double bilinear(const ScalarField& f, double x1, double x2) {
    const Grid& g = f.grid;
    const double h = g.h();
    double s = std::clamp((x1 - g.a) / h, 0.0, (double)(g.n - 1));
    double t = std::clamp((x2 - g.a) / h, 0.0, (double)(g.n - 1));
    const int i = std::min((int)s, g.n - 2), j = std::min((int)t, g.n - 2);
    s -= i;
    t -= j;
    return (1 - s) * (1 - t) * f.at(i, j) + s * (1 - t) * f.at(i + 1, j) +
           (1 - s) * t * f.at(i, j + 1) + s * t * f.at(i + 1, j + 1);
}

}  // namespace

LeafFamily make_leaf_family(const std::vector<Ray>& rays) {
    LeafFamily fam;
    fam.rays = rays;
    std::sort(fam.rays.begin(), fam.rays.end(),
              [](const Ray& a, const Ray& b) { return a.t < b.t; });
    const int n = fam.size();
    fam.t.resize(n);
    fam.gamma.resize(n);
    fam.xi.resize(n);
    fam.gamma_dot.resize(n);
    fam.xi_dot.resize(n);
    fam.theta.resize(n);
    fam.j.resize(n);
    fam.f_xi.resize(n);
    fam.R.resize(n);

    std::vector<double> g1(n), g2(n), th(n), rr(n);
    for (int k = 0; k < n; ++k) {
        fam.t[k] = fam.rays[k].t;
        g1[k] = fam.rays[k].foot[0];
        g2[k] = fam.rays[k].foot[1];
        th[k] = fam.rays[k].theta;
        rr[k] = fam.rays[k].R;
    }
    for (int k = 0; k < n; ++k) {
        const Fit f1 = quad_fit(fam.t, g1, k);
        const Fit f2 = quad_fit(fam.t, g2, k);
        const Fit ft = quad_fit(fam.t, th, k);
        const Fit fr = quad_fit(fam.t, rr, k);
        fam.gamma[k] = {f1.value, f2.value};
        fam.theta[k] = ft.value;
        fam.R[k] = fr.value;
        fam.xi[k] = {std::cos(ft.value), std::sin(ft.value)};
        fam.gamma_dot[k] = {f1.deriv, f2.deriv};
        fam.xi_dot[k] = {-std::sin(ft.value) * ft.deriv,
                         std::cos(ft.value) * ft.deriv};
        double jj = cross(fam.xi[k], fam.gamma_dot[k]);
        if (jj < 0.0) {
            // reverse the local parameter orientation so transversality holds
            fam.gamma_dot[k] = {-fam.gamma_dot[k][0], -fam.gamma_dot[k][1]};
            fam.xi_dot[k] = {-fam.xi_dot[k][0], -fam.xi_dot[k][1]};
            jj = -jj;
        }
        fam.j[k] = jj;
        fam.f_xi[k] = cross(fam.xi[k], fam.xi_dot[k]);
        if (jj <= 0.0) fam.transversal = false;
        if (fam.f_xi[k] < -1e-9) fam.spreading = false;
    }
    if (n < 2) fam.transversal = false;
    return fam;
}

std::vector<LeafFamily> make_leaf_families(const std::vector<Ray>& rays,
                                           double gap) {
    std::vector<Ray> sorted = rays;
    std::sort(sorted.begin(), sorted.end(),
              [](const Ray& a, const Ray& b) { return a.t < b.t; });
    std::vector<LeafFamily> out;
    std::vector<Ray> chunk;
    for (const Ray& r : sorted) {
        if (!chunk.empty() && r.t - chunk.back().t > gap) {
            out.push_back(make_leaf_family(chunk));
            chunk.clear();
        }
        chunk.push_back(r);
    }
    if (!chunk.empty()) out.push_back(make_leaf_family(chunk));
    return out;
}

double leaf_jacobian(const LeafFamily& family, double r, int k,
                     bool* degenerate) {
    const double J = family.j[k] + r * family.f_xi[k];
    if (degenerate) *degenerate = J <= 0.0;
    return J;
}

std::optional<double> laplacian_on_leaf(const LeafFamily& family, int k,
                                        double r) {
    const double f = std::hypot(family.xi_dot[k][0], family.xi_dot[k][1]);
    if (f < 1e-12) return std::nullopt;
    const double R = family.R[k];
    return 3.0 - (3.0 * r - 2.0 * R) / (r + family.j[k] / f);
}

RaySamples sample_ray(const LeafFamily& family, int k, const ScalarField& u) {
    RaySamples s;
    s.j = family.j[k];
    s.f_xi = family.f_xi[k];
    s.gdot = std::hypot(family.gamma_dot[k][0], family.gamma_dot[k][1]);
    s.R = family.R[k];
    s.neumann = family.rays[k].neumann;

    TensorField d2 = hessian(u);
    ScalarField lap(u.grid);
    for (int kk = 0; kk < u.grid.num_nodes(); ++kk)
        lap.values[kk] = d2.d11[kk] + d2.d22[kk];

    const int intervals = std::max(2, 2 * (int)std::ceil(
                                          s.R / (2.0 * u.grid.h()) + 0.5));
    const double dr = s.R / intervals;
    for (int i = 0; i <= intervals; ++i) {
        const double r = i * dr;
        s.r.push_back(r);
        s.lap.push_back(bilinear(lap, family.gamma[k][0] + r * family.xi[k][0],
                                 family.gamma[k][1] + r * family.xi[k][1]));
    }
    return s;
}

LeafResiduals ray_residuals(const RaySamples& s, int s_grid) {
    const int ns = (int)s.r.size();
    if (ns < 3 || ns % 2 == 0)
        throw std::invalid_argument("ray samples must have odd count >= 3");
    const double dr = s.R / (ns - 1);

    auto integrate = [&](auto&& weight) {
        double acc = 0.0;
        for (int i = 0; i < ns; ++i) {
            const double w = (i == 0 || i == ns - 1) ? 1.0
                             : (i % 2 == 1)          ? 4.0
                                                     : 2.0;
            const double density =
                (3.0 - s.lap[i]) * (s.j + s.r[i] * s.f_xi);
            acc += w * density * weight(s.r[i]);
        }
        return acc * dr / 3.0;
    };

    LeafResiduals out;
    const double atom = s.gdot * s.neumann;  // boundary mass at the foot
    out.moment0 = integrate([](double) { return 1.0; }) + atom;
    out.moment1 = integrate([](double r) { return r; });
    out.neumann = s.R * s.R * std::abs(s.f_xi) - 2.0 * atom;

    // localization battery: test sigma_ray against signed affine and convex
    // functions of r; the minimizer makes all of these nonnegative
    double lo = std::min({out.moment0, -out.moment0, out.moment1,
                          -out.moment1,
                          integrate([](double r) { return r * r; })});
    for (int l = 1; l <= s_grid; ++l) {
        const double knot = s.R * l / (s_grid + 1);
        lo = std::min(lo, integrate([&](double r) {
                          return std::max(r - knot, 0.0);
                      }));
    }
    out.min_localization = lo;
    return out;
}

std::array<double, 2> moment_residuals(const LeafFamily& family, int k,
                                       const ScalarField& u) {
    LeafResiduals r = ray_residuals(sample_ray(family, k, u));
    return {r.moment0, r.moment1};
}

double neumann_ray_residual(const LeafFamily& family, int k,
                            const ScalarField& u) {
    return ray_residuals(sample_ray(family, k, u)).neumann;
}

double leafwise_localization_check(const LeafFamily& family, int k,
                                   const ScalarField& u, int s_grid) {
    return ray_residuals(sample_ray(family, k, u), s_grid).min_localization;
}

SigmaBalance sigma_mass_balance(const ScalarField& u,
                                const RegionMasks* masks) {
    const Grid& g = u.grid;
    const double h = g.h();
    SigmaBalance out;

    TensorField d2 = hessian(u);
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
            const double wi = (i == 0 || i == g.n - 1) ? 0.5 : 1.0;
            const double wj = (j == 0 || j == g.n - 1) ? 0.5 : 1.0;
            const int k = g.index(i, j);
            const double m = wi * wj * h * h * (3.0 - d2.d11[k] - d2.d22[k]);
            out.interior += m;
            if (masks) out.interior_by_region[masks->labels[k]] += m;
        }

    // per-side trapezoid of (Du - x) . n, corners split between both sides
    VectorField du = gradient(u);
    auto side = [&](auto&& node, const std::array<double, 2>& nrm) {
        double acc = 0.0;
        for (int q = 0; q < g.n; ++q) {
            const auto [i, j] = node(q);
            const int k = g.index(i, j);
            const double v = (du.c1[k] - g.x1(i)) * nrm[0] +
                             (du.c2[k] - g.x2(j)) * nrm[1];
            acc += ((q == 0 || q == g.n - 1) ? 0.5 : 1.0) * v * h;
        }
        return acc;
    };
    using IJ = std::array<int, 2>;
    out.boundary += side([&](int q) { return IJ{q, 0}; }, {0.0, -1.0});
    out.boundary += side([&](int q) { return IJ{g.n - 1, q}; }, {1.0, 0.0});
    out.boundary += side([&](int q) { return IJ{q, g.n - 1}; }, {0.0, 1.0});
    out.boundary += side([&](int q) { return IJ{0, q}; }, {-1.0, 0.0});

    out.total = out.interior + out.boundary;
    return out;
}

void write_residuals_csv(const LeafFamily& family, const ScalarField& u,
                         const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "w");
    if (!fp) throw std::runtime_error("cannot open " + path);
    std::fprintf(fp,
                 "t,R,res_moment0,res_moment1,res_neumann,min_localization\n");
    for (int k = 0; k < family.size(); ++k) {
        LeafResiduals r = ray_residuals(sample_ray(family, k, u));
        std::fprintf(fp, "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n", family.t[k],
                     family.R[k], r.moment0, r.moment1, r.neumann,
                     r.min_localization);
    }
    std::fclose(fp);
}

}  // namespace monopolist
