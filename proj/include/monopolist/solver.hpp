#pragma once

#include <optional>
#include <string>
#include <vector>

#include "monopolist/grid.hpp"

namespace monopolist {

// Directional second-difference constraints: for every node where both
// offset neighbours exist, scale * (u(p-d) - 2 u(p) + u(p+d)) >= 0.
struct StencilDirection {
    int di = 0, dj = 0;
    double scale = 0.0;  // 1 / |d*h|^2
};

struct ConvexityStencil {
    std::vector<StencilDirection> directions;
};

// K in {4, 8, 16}: axes+diagonals, then knight-move refinements.
ConvexityStencil make_stencil(const Grid& grid, int K = 4);

struct SolveOptions {
    int max_iters = 200000;
    double primal_step = 0.0;  // 0 = derive from operator norms
    double dual_step = 0.0;
    double tol_energy = 1e-9;  // relative, over a 50-iteration window
    double tol_feas = 1e-8;
    bool deterministic = true;
    int check_interval = 25;
    std::string telemetry_csv;  // append "iter,energy,feas_convex,feas_nonneg"
};

struct SolveResult {
    ScalarField u;
    double energy = 0.0;
    int iterations = 0;
    double feas_convex = 0.0;  // min scaled directional second difference
    double feas_nonneg = 0.0;  // min of u
    bool converged = false;
};

// Trapezoid-weighted sum of 1/2 |Du - x|^2 + u over the square.
double energy(const ScalarField& u);

// Explicit sparse quadratic form with energy(u) = 1/2 u'Qu + c'u + constant.
struct QuadraticObjective {
    Grid grid;
    // CSR
    std::vector<int> row_ptr, col;
    std::vector<double> val;
    std::vector<double> linear;
    double constant = 0.0;

    void apply(const std::vector<double>& x, std::vector<double>& y) const;
    double evaluate(const std::vector<double>& u) const;
};

QuadraticObjective assemble_objective(const Grid& grid);

// Approximate Euclidean projection onto the cone of nonnegative directional
// second differences (Dykstra sweeps over the half-spaces).
ScalarField project_convex_cone(const ScalarField& u,
                                const ConvexityStencil& stencil, int iters);

// Minimum scaled directional second difference over all constraints.
double min_second_difference(const ScalarField& u,
                             const ConvexityStencil& stencil);

// Primal-dual splitting over {u >= 0} x {directional second diffs >= 0}.
SolveResult minimize(const Grid& grid, const ConvexityStencil& stencil,
                     const SolveOptions& opts,
                     const std::optional<ScalarField>& init = std::nullopt);

}  // namespace monopolist
