#pragma once

#include <array>
#include <string>
#include <vector>

#include "monopolist/grid.hpp"

namespace monopolist {

enum RegionLabel : int { OMEGA0 = 0, OMEGA1 = 1, OMEGA2 = 2 };

struct Thresholds {
    double eps0 = 0.0;   // |u| cut for the exclusion set; 0 means 10 h^2
    double eps1 = 0.05;  // rank-deficiency cut: lambda_min < eps1 * lambda_max
    double eps2 = 0.2;   // Poisson residual cut |lap u - 3| on Omega2
};

struct RegionMasks {
    Grid grid;
    std::vector<int> labels;
    std::vector<double> lmin, lmax;  // Hessian eigenvalues used by the cuts
    Thresholds used;
    double poisson_violation_fraction = 0.0;
    bool poisson_warning = false;  // over 5% of Omega2 nodes off |lap-3|<=eps2

    int count(RegionLabel l) const;
};

RegionMasks classify_regions(const ScalarField& u, Thresholds thr = {});

struct Ray {
    std::array<double, 2> foot{};   // on the fixed boundary (or nearest point)
    std::array<double, 2> xi{};     // unit direction, pointing inward
    double R = 0.0;                 // length foot -> tip
    std::array<double, 2> grad{};   // shared gradient value of the bunch
    double theta = 0.0;             // angle of xi vs horizontal
    double t = 0.0;                 // boundary walk parameter of the foot
    double neumann = 0.0;           // (grad - foot) . n at the foot
    int nodes = 0;                  // cluster size
};

struct RayExtraction {
    std::vector<Ray> rays;    // tame: one boundary foot, Neumann failing
    std::vector<Ray> stray;   // interior-only or Neumann-satisfying bunches
};

RayExtraction extract_rays(const ScalarField& u, const RegionMasks& masks);

struct FreeBoundary {
    // Edge crossings between Omega1 and Omega2 cells, interpolated along the
    // rank-deficiency indicator.
    std::vector<std::array<double, 2>> points;
};

FreeBoundary free_boundary(const RegionMasks& masks);

struct RayProfile {
    std::vector<double> t, R;
    double max_jump = 0.0;
    std::vector<int> local_maxima;          // indices into t/R
    std::vector<double> secant_slopes;      // |dR/dt| per adjacent pair
};

RayProfile ray_diameter_profile(const std::vector<Ray>& rays);

void write_labels(const RegionMasks& masks, const std::string& path);
std::string rays_to_json(const RayExtraction& rays);

}  // namespace monopolist
