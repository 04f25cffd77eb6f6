#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "monopolist/grid.hpp"
#include "monopolist/square_ode.hpp"

namespace monopolist {

struct MixedBvpOptions {
    int max_iters = 400000;
    double omega = 0.0;    // 0 = 2/(1+sin(pi h))
    double tol = 1e-10;    // residual of the discrete equation
};

// Poisson solve of lap u2 = 3 on the masked subdomain: nodes outside the
// mask act as Dirichlet data, square sides listed in neumann_sides carry the
// distortion-free condition (Du2 - x).n = 0 via ghost nodes, all other
// square-boundary nodes in the mask must have their data in `dirichlet`.
// Side order: 0 south, 1 east, 2 north, 3 west.
ScalarField solve_mixed_bvp(const std::vector<char>& omega2,
                            const ScalarField& dirichlet,
                            const std::array<bool, 4>& neumann_sides,
                            const MixedBvpOptions& opts = {});

struct AssembleOptions {
    double ode_step = 1e-3;
    double s0_offset = 0.0;  // shifts the blunt exclusion hypotenuse
    MixedBvpOptions bvp;
};

struct CandidateSolution {
    double a = 0.0;
    Grid grid;
    double theta0 = 0.0, h0 = 0.0;
    std::vector<double> r_knots;  // piecewise-linear R over [theta0, 0]

    bool blunt = false;            // Omega1^0 strip present
    double s0 = 0.0, s1 = 0.0;     // diagonal offsets bounding the strip
    bool has_fan = false;
    U1Piece fan;                   // west-side piece; south by reflection
    StripProfile strip;

    std::vector<int> region;       // assembled labels (RegionLabel values)
    ScalarField u;                 // glued field
    std::vector<std::array<double, 2>> omega0_polygon;

    // analytic gradient of the non-Omega2 pieces; zero on Omega0
    std::array<double, 2> piece_gradient(double x1, double x2) const;
};

// theta0 in [-pi/4, 0), h0 in (a, a+1); r_knots >= 0 sampled uniformly over
// [theta0, 0]. theta0 = -pi/4 with blunt_zone(a).blunt_expected selects the
// blunt construction (Omega0 triangle at s(a), strip up to s1 = a + h0,
// forced R0 = (h0 - a)/sqrt(2)). Throws "geometry overlap" when the fan dips
// below the diagonal.
CandidateSolution assemble_candidate(const Grid& grid, double theta0,
                                     double h0, std::vector<double> r_knots,
                                     const AssembleOptions& opts = {});

struct ResidualReport {
    double r_interface = 0.0;  // |D(u2 - u1) . n| on the Omega1/Omega2 seam
    double r_exclusion = 0.0;  // |Du2 . n| on the Omega0/Omega2 seam
    double r_fixed = 0.0;      // |(Du2 - x) . n| on the fixed boundary
    double r_c1 = 0.0;         // worst gradient jump across any seam

    double objective(const std::array<double, 4>& w = {1, 1, 1, 1}) const {
        return w[0] * r_interface + w[1] * r_exclusion + w[2] * r_fixed +
               w[3] * r_c1;
    }
};

ResidualReport free_boundary_residuals(const CandidateSolution& candidate);

struct FitOptions {
    int knots = 6;
    int max_rounds = 8;
    double initial_step = 0.05;
    std::array<double, 4> weights{1, 1, 1, 1};  // for the reported objective
    AssembleOptions assemble;
};

struct FitResult {
    CandidateSolution candidate;
    ResidualReport residuals;
    double objective = 0.0;  // weighted max-form objective of the winner
    int evaluations = 0;
    std::vector<double> trace;  // best search value after each round
};

// Derivative-free fit of (theta0, h0, R knots) by cyclic coordinate search
// with golden-section line searches. The search ranks candidates by the
// root-mean-square of all seam and boundary residual samples (the max over
// a staircase-sampled seam is too jagged for line searches); the returned
// objective and trace entries are therefore on different scales. Throws
// "no admissible candidate" when every probe violates the geometry.
FitResult fit_free_boundary(const Grid& grid, double a,
                            const FitOptions& opts = {});

void write_candidate_bundle(const CandidateSolution& candidate,
                            const ResidualReport& residuals,
                            const std::string& dir);

}  // namespace monopolist
