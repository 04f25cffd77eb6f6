#pragma once

#include <array>
#include <string>
#include <vector>

#include "monopolist/grid.hpp"

namespace monopolist {

enum class BoundaryKind { Dirichlet, Neumann };

// Per-side boundary data, indexed by side: 0=south, 1=east, 2=north, 3=west.
struct SideCondition {
    BoundaryKind kind = BoundaryKind::Dirichlet;
    std::vector<double> values;  // n samples along the side, node order of the side axis
};

// Obstacle problem: v >= psi, Delta v <= f, complementarity, on the grid square.
struct ObstacleProblem {
    Grid grid;
    std::vector<double> f;    // right-hand side per node
    std::vector<double> psi;  // obstacle, default 0
    std::array<SideCondition, 4> sides;

    explicit ObstacleProblem(const Grid& g)
        : grid(g), f(g.num_nodes(), 0.0), psi(g.num_nodes(), 0.0) {
        for (auto& s : sides) s.values.assign(g.n, 0.0);
    }
};

struct ObstacleOptions {
    int max_iters = 200000;
    double omega = 1.7;       // over-relaxation
    double tol = 1e-8;        // complementarity residual target
    bool deterministic = true;
};

struct ObstacleSolution {
    ScalarField v;
    std::vector<char> contact;  // 1 where v is pinned to the obstacle
    double complementarity = 0.0;
    int iterations = 0;
    bool converged = false;
};

ObstacleSolution solve_obstacle(const ObstacleProblem& problem,
                                const ObstacleOptions& opts = {});

// a=0 specialization: f=3, psi=0, vanishing normal distortion (Dn v = x.n).
ObstacleSolution solve_a0(const Grid& grid, const ObstacleOptions& opts = {});

struct DetachmentMargin {
    int i = 0, j = 0;       // free-boundary node
    double rho = 0.0;
    double margin = 0.0;    // sup_{B_rho} v - (c0/2) rho^2
    bool violated = false;
};

// Quadratic detachment margins at free-boundary nodes (non-contact nodes
// adjacent to contact): sup over the rho-ball of v minus (c0/2) rho^2.
std::vector<DetachmentMargin> quadratic_detachment(const ObstacleSolution& sol,
                                                   double c0,
                                                   const std::vector<double>& radii);

// Contact mask CSV with the field header convention, entries 0/1.
void write_mask(const Grid& grid, const std::vector<char>& mask,
                const std::string& path);

}  // namespace monopolist
