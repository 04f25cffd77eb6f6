#include "monopolist/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

namespace monopolist {

namespace {

std::vector<double> trapezoid_weights(const Grid& g) {
    const int n = g.n;
    const double h = g.h();
    std::vector<double> w(g.num_nodes());
    auto w1 = [&](int k) { return (k == 0 || k == n - 1) ? 0.5 * h : h; };
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) w[g.index(i, j)] = w1(i) * w1(j);
    return w;
}

// Forward line stencil: second-order one-sided at the ends.
inline void grad_line(const double* u, double* out, int n, int stride,
                      double c) {
    out[0] = c * (-3.0 * u[0] + 4.0 * u[stride] - u[2 * stride]);
    for (int k = 1; k < n - 1; ++k)
        out[k * stride] = c * (u[(k + 1) * stride] - u[(k - 1) * stride]);
    out[(n - 1) * stride] = c * (3.0 * u[(n - 1) * stride] -
                                 4.0 * u[(n - 2) * stride] +
                                 u[(n - 3) * stride]);
}

// Adjoint of grad_line: z += S^T r.
inline void grad_line_adj(const double* r, double* z, int n, int stride,
                          double c) {
    z[0] += c * -3.0 * r[0];
    z[stride] += c * 4.0 * r[0];
    z[2 * stride] += c * -r[0];
    for (int k = 1; k < n - 1; ++k) {
        const double rk = r[k * stride];
        z[(k + 1) * stride] += c * rk;
        z[(k - 1) * stride] -= c * rk;
    }
    const double rn = r[(n - 1) * stride];
    z[(n - 1) * stride] += c * 3.0 * rn;
    z[(n - 2) * stride] -= c * 4.0 * rn;
    z[(n - 3) * stride] += c * rn;
}

struct GradOp {
    const Grid* g;

    void apply(const std::vector<double>& u, std::vector<double>& gx,
               std::vector<double>& gy) const {
        const int n = g->n;
        const double c = 0.5 * (n - 1);  // 1/(2h)
        for (int j = 0; j < n; ++j) grad_line(u.data() + j, gx.data() + j, n, n, c);
        for (int i = 0; i < n; ++i)
            grad_line(u.data() + i * n, gy.data() + i * n, n, 1, c);
    }

    void apply_adjoint(const std::vector<double>& gx,
                       const std::vector<double>& gy,
                       std::vector<double>& z) const {
        const int n = g->n;
        const double c = 0.5 * (n - 1);
        std::fill(z.begin(), z.end(), 0.0);
        for (int j = 0; j < n; ++j) grad_line_adj(gx.data() + j, z.data() + j, n, n, c);
        for (int i = 0; i < n; ++i)
            grad_line_adj(gy.data() + i * n, z.data() + i * n, n, 1, c);
    }
};

struct ConstraintOp {
    const Grid* g;
    const ConvexityStencil* st;
    std::vector<int> dir_offsets;  // constraint index range per direction
    int m = 0;

    ConstraintOp(const Grid& grid, const ConvexityStencil& stencil)
        : g(&grid), st(&stencil) {
        dir_offsets.push_back(0);
        for (const auto& d : stencil.directions) {
            const int ai = std::abs(d.di), aj = std::abs(d.dj);
            const int ni = std::max(0, grid.n - 2 * ai);
            const int nj = std::max(0, grid.n - 2 * aj);
            m += ni * nj;
            dir_offsets.push_back(m);
        }
    }

    template <typename F>
    void for_each(F&& f) const {
        int k = 0;
        for (const auto& d : st->directions) {
            const int ai = std::abs(d.di), aj = std::abs(d.dj);
            const int step = d.di * g->n + d.dj;
            for (int i = ai; i < g->n - ai; ++i)
                for (int j = aj; j < g->n - aj; ++j) {
                    const int p = g->index(i, j);
                    f(k++, p, step, d.scale);
                }
        }
    }

    void apply(const std::vector<double>& u, std::vector<double>& out) const {
        for_each([&](int k, int p, int step, double s) {
            out[k] = s * (u[p - step] - 2.0 * u[p] + u[p + step]);
        });
    }

    void apply_adjoint(const std::vector<double>& lam,
                       std::vector<double>& z) const {
        std::fill(z.begin(), z.end(), 0.0);
        for_each([&](int k, int p, int step, double s) {
            const double v = s * lam[k];
            z[p - step] += v;
            z[p] -= 2.0 * v;
            z[p + step] += v;
        });
    }
};

double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

// Deterministic pseudo-random fill for power iteration.
void seed_vector(std::vector<double>& v) {
    std::uint64_t s = 0x9e3779b97f4a7c15ull;
    for (double& x : v) {
        s = s * 6364136223846793005ull + 1442695040888963407ull;
        x = static_cast<double>(s >> 11) / static_cast<double>(1ull << 53) - 0.5;
    }
}

}  // namespace

ConvexityStencil make_stencil(const Grid& grid, int K) {
    std::vector<std::pair<int, int>> dirs = {{1, 0}, {0, 1}, {1, 1}, {1, -1}};
    if (K >= 8) {
        dirs.insert(dirs.end(), {{2, 1}, {1, 2}, {2, -1}, {1, -2}});
    }
    if (K >= 16) {
        dirs.insert(dirs.end(),
                    {{3, 1}, {1, 3}, {3, -1}, {1, -3}, {3, 2}, {2, 3}, {3, -2}, {2, -3}});
    }
    if (K != 4 && K != 8 && K != 16)
        throw std::invalid_argument("stencil K must be 4, 8 or 16");
    ConvexityStencil st;
    const double h = grid.h();
    for (auto [di, dj] : dirs) {
        const double len2 = (di * di + dj * dj) * h * h;
        st.directions.push_back({di, dj, 1.0 / len2});
    }
    return st;
}

double energy(const ScalarField& u) {
    const Grid& g = u.grid;
    const auto w = trapezoid_weights(g);
    VectorField du = gradient(u);
    double e = 0.0;
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
            const int idx = g.index(i, j);
            const double r1 = du.c1[idx] - g.x1(i);
            const double r2 = du.c2[idx] - g.x2(j);
            e += w[idx] * (0.5 * (r1 * r1 + r2 * r2) + u.values[idx]);
        }
    return e;
}

void QuadraticObjective::apply(const std::vector<double>& x,
                               std::vector<double>& y) const {
    const int n = static_cast<int>(row_ptr.size()) - 1;
    y.assign(n, 0.0);
    for (int r = 0; r < n; ++r) {
        double s = 0.0;
        for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k) s += val[k] * x[col[k]];
        y[r] = s;
    }
}

double QuadraticObjective::evaluate(const std::vector<double>& u) const {
    std::vector<double> qu;
    apply(u, qu);
    double e = constant;
    for (std::size_t i = 0; i < u.size(); ++i)
        e += 0.5 * u[i] * qu[i] + linear[i] * u[i];
    return e;
}

QuadraticObjective assemble_objective(const Grid& grid) {
    const int n = grid.n;
    const int N = grid.num_nodes();
    const auto w = trapezoid_weights(grid);
    const double c = 0.5 * (n - 1);

    // Stencil rows of the gradient in one line coordinate.
    auto line_row = [&](int k, int nn, int* idx, double* cf) -> int {
        if (k == 0) {
            idx[0] = 0; idx[1] = 1; idx[2] = 2;
            cf[0] = -3 * c; cf[1] = 4 * c; cf[2] = -c;
            return 3;
        }
        if (k == nn - 1) {
            idx[0] = nn - 1; idx[1] = nn - 2; idx[2] = nn - 3;
            cf[0] = 3 * c; cf[1] = -4 * c; cf[2] = c;
            return 3;
        }
        idx[0] = k + 1; idx[1] = k - 1;
        cf[0] = c; cf[1] = -c;
        return 2;
    };

    std::unordered_map<std::int64_t, double> acc;
    acc.reserve(static_cast<std::size_t>(N) * 12);
    QuadraticObjective Q;
    Q.grid = grid;
    Q.linear.assign(N, 0.0);

    int li[3];
    double lc[3];
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const int idx = grid.index(i, j);
            const double wi = w[idx];
            Q.linear[idx] += wi;  // the +u part of the integrand
            const double x1 = grid.x1(i), x2 = grid.x2(j);
            Q.constant += 0.5 * wi * (x1 * x1 + x2 * x2);
            // d/dx1 row: varies i at fixed j; d/dx2 row: varies j at fixed i.
            for (int comp = 0; comp < 2; ++comp) {
                const int m = line_row(comp == 0 ? i : j, n, li, lc);
                const double xc = comp == 0 ? x1 : x2;
                for (int p = 0; p < m; ++p) {
                    const int gp = comp == 0 ? grid.index(li[p], j)
                                             : grid.index(i, li[p]);
                    Q.linear[gp] -= wi * xc * lc[p];
                    for (int q = 0; q < m; ++q) {
                        const int gq = comp == 0 ? grid.index(li[q], j)
                                                 : grid.index(i, li[q]);
                        acc[static_cast<std::int64_t>(gp) * N + gq] +=
                            wi * lc[p] * lc[q];
                    }
                }
            }
        }
    }

    std::vector<std::pair<std::int64_t, double>> entries(acc.begin(), acc.end());
    std::sort(entries.begin(), entries.end());
    Q.row_ptr.assign(N + 1, 0);
    Q.col.reserve(entries.size());
    Q.val.reserve(entries.size());
    for (const auto& [key, v] : entries) {
        Q.row_ptr[key / N + 1]++;
        Q.col.push_back(static_cast<int>(key % N));
        Q.val.push_back(v);
    }
    for (int r = 0; r < N; ++r) Q.row_ptr[r + 1] += Q.row_ptr[r];
    return Q;
}

double min_second_difference(const ScalarField& u,
                             const ConvexityStencil& stencil) {
    ConstraintOp A(u.grid, stencil);
    double mn = 1e300;
    A.for_each([&](int, int p, int step, double s) {
        mn = std::min(mn, s * (u.values[p - step] - 2.0 * u.values[p] +
                               u.values[p + step]));
    });
    return mn;
}

ScalarField project_convex_cone(const ScalarField& u,
                                const ConvexityStencil& stencil, int iters) {
    ConstraintOp A(u.grid, stencil);
    ScalarField out = u;
    std::vector<double> corr(A.m, 0.0);  // Dykstra corrections, one per half-space
    // |a_k|^2 = scale^2 * (1 + 4 + 1)
    for (int sweep = 0; sweep < iters; ++sweep) {
        A.for_each([&](int k, int p, int step, double s) {
            auto& v = out.values;
            const double norm2a = 6.0 * s * s;
            // add back previous correction along a_k
            double av = s * (v[p - step] - 2.0 * v[p] + v[p + step]) +
                        corr[k] * norm2a;
            v[p - step] += corr[k] * s;
            v[p] -= 2.0 * corr[k] * s;
            v[p + step] += corr[k] * s;
            const double alpha = std::min(0.0, av) / norm2a;
            corr[k] = alpha;
            v[p - step] -= alpha * s;
            v[p] += 2.0 * alpha * s;
            v[p + step] -= alpha * s;
        });
    }
    return out;
}

SolveResult minimize(const Grid& grid, const ConvexityStencil& stencil,
                     const SolveOptions& opts,
                     const std::optional<ScalarField>& init) {
    const int N = grid.num_nodes();
    const double h = grid.h();
    GradOp G{&grid};
    // Unit-norm constraint rows keep the dual steps well scaled; feasibility
    // is still reported in the stencil's own scaling.
    ConvexityStencil unit = stencil;
    for (auto& d : unit.directions) d.scale = 1.0 / std::sqrt(6.0);
    ConstraintOp A(grid, unit);
    ConstraintOp Afeas(grid, stencil);
    const auto w = trapezoid_weights(grid);

    std::vector<double> xt1(N), xt2(N);  // target gradient field (= x)
    for (int i = 0; i < grid.n; ++i)
        for (int j = 0; j < grid.n; ++j) {
            xt1[grid.index(i, j)] = grid.x1(i);
            xt2[grid.index(i, j)] = grid.x2(j);
        }

    std::vector<double> u(N, 0.0);
    if (init) {
        if (!(init->grid == grid))
            throw std::invalid_argument("init field on wrong grid");
        u = init->values;
    }

    // operator norms by power iteration
    std::vector<double> pv(N), gx(N), gy(N), tmp(N), lam(A.m, 0.0), av(A.m);
    seed_vector(pv);
    double normA = 0.0;
    for (int it = 0; it < 60; ++it) {
        A.apply(pv, av);
        A.apply_adjoint(av, tmp);
        const double nrm = norm2(tmp);
        if (nrm == 0.0) break;
        normA = std::sqrt(nrm / norm2(pv));
        for (int i = 0; i < N; ++i) pv[i] = tmp[i] / nrm;
    }
    seed_vector(pv);
    double normQ = 0.0;
    for (int it = 0; it < 60; ++it) {
        G.apply(pv, gx, gy);
        for (int i = 0; i < N; ++i) {
            gx[i] *= w[i];
            gy[i] *= w[i];
        }
        G.apply_adjoint(gx, gy, tmp);
        const double nrm = norm2(tmp);
        if (nrm == 0.0) break;
        normQ = nrm / norm2(pv);
        for (int i = 0; i < N; ++i) pv[i] = tmp[i] / nrm;
    }

    const double sigma = opts.dual_step > 0 ? opts.dual_step : 1.0 / normA;
    const double tau = opts.primal_step > 0
                           ? opts.primal_step
                           : 0.9 / (0.5 * normQ + sigma * normA * normA);

    auto eval_energy = [&](const std::vector<double>& v) {
        G.apply(v, gx, gy);
        double e = 0.0;
        for (int i = 0; i < N; ++i) {
            const double r1 = gx[i] - xt1[i], r2 = gy[i] - xt2[i];
            e += w[i] * (0.5 * (r1 * r1 + r2 * r2) + v[i]);
        }
        return e;
    };
    std::vector<double> avf(Afeas.m);
    auto feas_convex_of = [&](const std::vector<double>& v) {
        double mn = 1e300;
        Afeas.apply(v, avf);
        for (double x : avf) mn = std::min(mn, x);
        return mn;
    };

    std::ofstream telemetry;
    if (!opts.telemetry_csv.empty()) {
        telemetry.open(opts.telemetry_csv, std::ios::app);
        telemetry << "iter,energy,feas_convex,feas_nonneg\n";
    }

    std::vector<double> grad(N), unew(N), ubar(N), best = u;
    double best_energy = eval_energy(u);
    double best_feas = feas_convex_of(u);
    bool best_ok = best_feas >= -opts.tol_feas / (h * h);
    std::vector<std::pair<int, double>> window;  // (iter, energy) at checks
    bool converged = false;
    int iter = 0;

    for (; iter < opts.max_iters; ++iter) {
        // grad = Q u + c + A^T lambda
        G.apply(u, gx, gy);
        for (int i = 0; i < N; ++i) {
            gx[i] = w[i] * (gx[i] - xt1[i]);
            gy[i] = w[i] * (gy[i] - xt2[i]);
        }
        G.apply_adjoint(gx, gy, grad);
        A.apply_adjoint(lam, tmp);
        for (int i = 0; i < N; ++i) grad[i] += w[i] + tmp[i];

        for (int i = 0; i < N; ++i) {
            unew[i] = std::max(0.0, u[i] - tau * grad[i]);
            ubar[i] = 2.0 * unew[i] - u[i];
        }
        A.apply(ubar, av);
        for (int k = 0; k < A.m; ++k) lam[k] = std::min(0.0, lam[k] + sigma * av[k]);
        u.swap(unew);

        if ((iter + 1) % opts.check_interval == 0) {
            const double e = eval_energy(u);
            const double fc = feas_convex_of(u);
            double fn = 0.0;
            for (double x : u) fn = std::min(fn, x);
            const bool ok = fc >= -opts.tol_feas / (h * h) && fn >= -opts.tol_feas;
            if (telemetry.is_open())
                telemetry << iter + 1 << ',' << e << ',' << fc << ',' << fn << '\n';
            if (ok && (!best_ok || e < best_energy)) {
                best = u;
                best_energy = e;
                best_feas = fc;
                best_ok = true;
            }
            window.emplace_back(iter + 1, e);
            while (window.size() > 4) window.erase(window.begin());
            if (ok && window.size() >= 3 &&
                window.back().first - window.front().first >= 50) {
                const double de = std::abs(window.front().second - e);
                if (de < opts.tol_energy * std::max(1.0, std::abs(e))) {
                    converged = true;
                    ++iter;
                    break;
                }
            }
        }
    }

    SolveResult res;
    res.u = ScalarField(grid);
    res.u.values = best_ok ? best : u;
    res.iterations = iter;
    res.converged = converged && best_ok;
    res.energy = eval_energy(res.u.values);
    res.feas_convex = feas_convex_of(res.u.values);
    res.feas_nonneg = 0.0;
    for (double x : res.u.values) res.feas_nonneg = std::min(res.feas_nonneg, x);
    return res;
}

}  // namespace monopolist
