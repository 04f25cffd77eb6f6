#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "monopolist/grid.hpp"
#include "monopolist/regions.hpp"

namespace monopolist {

// Smooth parameterization t -> (gamma, xi, R) of an ordered ray family, with
// derivatives along t. Raw angles are smoothed by a local quadratic fit over
// up to 5 neighbors before differentiating; each ray is oriented so that the
// transversality Jacobian j = xi x gamma_dot comes out positive.
struct LeafFamily {
    std::vector<Ray> rays;  // sorted by boundary walk parameter
    std::vector<double> t;
    std::vector<std::array<double, 2>> gamma, xi;
    std::vector<std::array<double, 2>> gamma_dot, xi_dot;
    std::vector<double> theta;     // smoothed ray angles
    std::vector<double> j;         // xi x gamma_dot
    std::vector<double> f_xi;      // xi x xi_dot
    std::vector<double> R;
    bool transversal = true;       // min j > 0
    bool spreading = true;         // min f_xi >= 0

    int size() const { return (int)rays.size(); }
};

LeafFamily make_leaf_family(const std::vector<Ray>& rays);

// Partition rays into smooth families, splitting where the boundary walk
// parameter jumps by more than `gap` (feet on different sides, or disjoint
// fans on the same side).
std::vector<LeafFamily> make_leaf_families(const std::vector<Ray>& rays,
                                           double gap = 0.25);

// J(r,t) = j(t) + r f_xi(t); sets *degenerate when J <= 0.
double leaf_jacobian(const LeafFamily& family, double r, int k,
                     bool* degenerate = nullptr);

// Predicted Laplacian 3 - (3r - 2R)/(r + j/|xi_dot|) along ray k; empty when
// |xi_dot| < 1e-12 (untamed ray, the profile formula degenerates).
std::optional<double> laplacian_on_leaf(const LeafFamily& family, int k,
                                        double r);

// Density data of sigma restricted to one ray: uniform samples of the
// Laplacian along r in [0,R] (odd count, for Simpson weights) plus the
// boundary atom |gamma_dot| * neumann at the foot.
struct RaySamples {
    double j = 0.0, f_xi = 0.0, gdot = 1.0;
    double R = 0.0, neumann = 0.0;
    std::vector<double> r, lap;
};

RaySamples sample_ray(const LeafFamily& family, int k, const ScalarField& u);

struct LeafResiduals {
    double moment0 = 0.0;      // int (3-lap) J dr + |gamma_dot| neumann
    double moment1 = 0.0;      // int (3-lap) J r dr
    double neumann = 0.0;      // R^2 |xi_dot| - 2 |gamma_dot| neumann
    double min_localization = 0.0;
};

// Simpson quadrature of the three leafwise identities and the localization
// battery v in {+-1, +-r, r^2, (r-s)_+ on an s grid}.
LeafResiduals ray_residuals(const RaySamples& s, int s_grid = 9);

std::array<double, 2> moment_residuals(const LeafFamily& family, int k,
                                       const ScalarField& u);
double neumann_ray_residual(const LeafFamily& family, int k,
                            const ScalarField& u);
double leafwise_localization_check(const LeafFamily& family, int k,
                                   const ScalarField& u, int s_grid = 9);

struct SigmaBalance {
    double interior = 0.0;   // int (3 - lap u)
    double boundary = 0.0;   // oint (Du - x) . n
    double total = 0.0;      // interior + boundary, 1 for the minimizer
    std::array<double, 3> interior_by_region{};  // Omega0/Omega1/Omega2 split
};

SigmaBalance sigma_mass_balance(const ScalarField& u,
                                const RegionMasks* masks = nullptr);

// Residuals table: t,R,res_moment0,res_moment1,res_neumann,min_localization
void write_residuals_csv(const LeafFamily& family, const ScalarField& u,
                         const std::string& path);

}  // namespace monopolist
