#include "monopolist/obstacle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace monopolist {

namespace {

// Sweeps use the five-point Laplacian with ghost-node elimination on Neumann
// sides: the ghost value v(-1,j) = v(1,j) + 2h g folds into a doubled
// neighbor weight plus a constant load.  side order: 0=S,1=E,2=N,3=W.
struct StencilRow {
    double center = 4.0;
    double load = 0.0;  // ghost constant, added to the neighbor sum
};

bool side_is_neumann(const ObstacleProblem& p, int s) {
    return p.sides[s].kind == BoundaryKind::Neumann;
}

}  // namespace

ObstacleSolution solve_obstacle(const ObstacleProblem& problem,
                                const ObstacleOptions& opts) {
    const Grid& g = problem.grid;
    const int n = g.n;
    const double h = g.h();

    for (int s = 0; s < 4; ++s)
        if ((int)problem.sides[s].values.size() != n)
            throw std::invalid_argument("side data must have n samples");

    ObstacleSolution sol;
    sol.v = ScalarField(g);

    // Start on the obstacle so the iterates increase monotonically.
    sol.v.values = problem.psi;

    // Dirichlet sides pin their nodes outright.
    std::vector<char> pinned(g.num_nodes(), 0);
    auto pin_side = [&](int s) {
        const auto& sc = problem.sides[s];
        if (sc.kind != BoundaryKind::Dirichlet) return;
        for (int k = 0; k < n; ++k) {
            int i = 0, j = 0;
            switch (s) {
                case 0: i = k; j = 0; break;
                case 1: i = n - 1; j = k; break;
                case 2: i = k; j = n - 1; break;
                case 3: i = 0; j = k; break;
            }
            pinned[g.index(i, j)] = 1;
            sol.v.at(i, j) = sc.values[k];
        }
    };
    for (int s = 0; s < 4; ++s) pin_side(s);

    bool any_dirichlet = false;
    for (int s = 0; s < 4; ++s) any_dirichlet |= !side_is_neumann(problem, s);
    // All-Neumann problems are fine here: the obstacle itself grounds the
    // solution as long as the contact set is nonempty, which complementarity
    // checking will reveal if violated.

    auto neighbor_sum = [&](int i, int j, StencilRow& row) {
        double s = 0.0;
        row.load = 0.0;
        // west neighbor
        if (i > 0) s += sol.v.at(i - 1, j);
        else { s += sol.v.at(i + 1, j); row.load += 2.0 * h * problem.sides[3].values[j]; }
        // east neighbor
        if (i < n - 1) s += sol.v.at(i + 1, j);
        else { s += sol.v.at(i - 1, j); row.load += 2.0 * h * problem.sides[1].values[j]; }
        // south neighbor
        if (j > 0) s += sol.v.at(i, j - 1);
        else { s += sol.v.at(i, j + 1); row.load += 2.0 * h * problem.sides[0].values[i]; }
        // north neighbor
        if (j < n - 1) s += sol.v.at(i, j + 1);
        else { s += sol.v.at(i, j - 1); row.load += 2.0 * h * problem.sides[2].values[i]; }
        return s;
    };

    const double h2 = h * h;
    double residual = 0.0;
    int it = 0;
    for (; it < opts.max_iters; ++it) {
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const int k = g.index(i, j);
                if (pinned[k]) continue;
                StencilRow row;
                const double s = neighbor_sum(i, j, row);
                const double gs = (s + row.load - h2 * problem.f[k]) / row.center;
                const double cur = sol.v.values[k];
                sol.v.values[k] =
                    std::max(problem.psi[k], cur + opts.omega * (gs - cur));
            }
        }
        if (it % 50 == 49 || it == opts.max_iters - 1) {
            residual = 0.0;
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    const int k = g.index(i, j);
                    if (pinned[k]) continue;
                    StencilRow row;
                    const double s = neighbor_sum(i, j, row);
                    const double lap = (s + row.load - row.center * sol.v.values[k]) / h2;
                    const double slack = problem.f[k] - lap;
                    const double gap = sol.v.values[k] - problem.psi[k];
                    residual = std::max(residual, std::abs(std::min(gap, slack)));
                }
            }
            if (residual <= opts.tol) {
                ++it;
                break;
            }
        }
    }
    sol.iterations = it;
    sol.complementarity = residual;
    sol.converged = residual <= opts.tol;
    (void)any_dirichlet;

    double vmax = 0.0;
    for (double x : sol.v.values) vmax = std::max(vmax, std::abs(x));
    const double ctol = 1e-8 * vmax + h * h * h;
    sol.contact.assign(g.num_nodes(), 0);
    for (int k = 0; k < g.num_nodes(); ++k)
        if (sol.v.values[k] - problem.psi[k] <= ctol) sol.contact[k] = 1;
    return sol;
}

ObstacleSolution solve_a0(const Grid& grid, const ObstacleOptions& opts) {
    if (grid.a != 0.0)
        throw std::invalid_argument("solve_a0 requires a grid with a = 0");
    ObstacleProblem p(grid);
    std::fill(p.f.begin(), p.f.end(), 3.0);
    // (Dv - x).n = 0 on every side: Dn v equals x.n.
    for (int s = 0; s < 4; ++s) p.sides[s].kind = BoundaryKind::Neumann;
    for (int k = 0; k < grid.n; ++k) {
        p.sides[0].values[k] = -grid.a;        // south: n=(0,-1), x.n = -a
        p.sides[2].values[k] = grid.a + 1.0;   // north: x.n = a+1
        p.sides[3].values[k] = -grid.a;        // west: x.n = -a
        p.sides[1].values[k] = grid.a + 1.0;   // east: x.n = a+1
    }
    return solve_obstacle(p, opts);
}

std::vector<DetachmentMargin> quadratic_detachment(const ObstacleSolution& sol,
                                                   double c0,
                                                   const std::vector<double>& radii) {
    const Grid& g = sol.v.grid;
    const int n = g.n;
    std::vector<DetachmentMargin> out;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (sol.contact[g.index(i, j)]) continue;
            bool near_contact = false;
            if (i > 0) near_contact |= sol.contact[g.index(i - 1, j)] != 0;
            if (i < n - 1) near_contact |= sol.contact[g.index(i + 1, j)] != 0;
            if (j > 0) near_contact |= sol.contact[g.index(i, j - 1)] != 0;
            if (j < n - 1) near_contact |= sol.contact[g.index(i, j + 1)] != 0;
            if (!near_contact) continue;
            for (double rho : radii) {
                const int reach = (int)std::ceil(rho / g.h());
                double sup = 0.0;
                for (int di = -reach; di <= reach; ++di) {
                    for (int dj = -reach; dj <= reach; ++dj) {
                        const int ii = i + di, jj = j + dj;
                        if (ii < 0 || ii >= n || jj < 0 || jj >= n) continue;
                        const double dist = g.h() * std::hypot((double)di, (double)dj);
                        if (dist > rho) continue;
                        sup = std::max(sup, sol.v.at(ii, jj));
                    }
                }
                DetachmentMargin m;
                m.i = i;
                m.j = j;
                m.rho = rho;
                m.margin = sup - 0.5 * c0 * rho * rho;
                m.violated = m.margin < 0.0;
                out.push_back(m);
            }
        }
    }
    return out;
}

void write_mask(const Grid& grid, const std::vector<char>& mask,
                const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "w");
    if (!fp) throw std::runtime_error("cannot open " + path);
    std::fprintf(fp, "# monopolist-field v1\n");
    std::fprintf(fp, "n=%d a=%.17g\n", grid.n, grid.a);
    for (int i = 0; i < grid.n; ++i) {
        for (int j = 0; j < grid.n; ++j) {
            std::fprintf(fp, "%d%c", mask[grid.index(i, j)] ? 1 : 0,
                         j + 1 == grid.n ? '\n' : ',');
        }
    }
    std::fclose(fp);
}

}  // namespace monopolist
