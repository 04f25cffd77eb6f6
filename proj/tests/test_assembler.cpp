#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "doctest.h"
#include "monopolist/assembler.hpp"
#include "monopolist/grid.hpp"
#include "monopolist/obstacle.hpp"
#include "monopolist/solver.hpp"
#include "monopolist/square_ode.hpp"

using namespace monopolist;

namespace {

ScalarField exact_quadratic(const Grid& g, double c1, double c2) {
    ScalarField f(g);
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
            const double d1 = g.x1(i) - c1, d2 = g.x2(j) - c2;
            f.at(i, j) = 0.75 * (d1 * d1 + d2 * d2);
        }
    return f;
}

double harmonic_quartic(double x, double y) {
    return (x * x * x * x - 6.0 * x * x * y * y + y * y * y * y) / 10.0;
}

std::vector<char> interior_mask(const Grid& g) {
    std::vector<char> m(g.num_nodes(), 0);
    for (int i = 1; i + 1 < g.n; ++i)
        for (int j = 1; j + 1 < g.n; ++j) m[g.index(i, j)] = 1;
    return m;
}

double sup_diff(const ScalarField& u, const ScalarField& v,
                const std::vector<char>* where = nullptr) {
    double s = 0.0;
    for (size_t k = 0; k < u.values.size(); ++k) {
        if (where && !(*where)[k]) continue;
        s = std::max(s, std::abs(u.values[k] - v.values[k]));
    }
    return s;
}

}  // namespace

TEST_CASE("mixed BVP reproduces quadratics exactly") {
    const Grid g = make_grid(0.0, 33);

    SUBCASE("all-Dirichlet, off-center paraboloid") {
        const ScalarField exact = exact_quadratic(g, 0.3, 0.7);
        ScalarField data = exact;
        // scramble the interior so the solve has to do the work
        for (int i = 1; i + 1 < g.n; ++i)
            for (int j = 1; j + 1 < g.n; ++j) data.at(i, j) = 0.0;
        const ScalarField v =
            solve_mixed_bvp(interior_mask(g), data, {false, false, false,
                                                     false});
        CHECK(sup_diff(v, exact) <= 1e-7);
    }

    SUBCASE("Neumann south/west sides, corner paraboloid") {
        // 0.75 |x|^2 has dv/dn = x.n on the axes through the origin
        const ScalarField exact = exact_quadratic(g, 0.0, 0.0);
        ScalarField data = exact;
        std::vector<char> m(g.num_nodes(), 0);
        for (int i = 0; i + 1 < g.n; ++i)
            for (int j = 0; j + 1 < g.n; ++j) {
                m[g.index(i, j)] = 1;
                data.at(i, j) = 0.0;
            }
        const ScalarField v =
            solve_mixed_bvp(m, data, {true, false, false, true});
        CHECK(sup_diff(v, exact) <= 1e-6);
    }
}

TEST_CASE("mixed BVP converges at second order on a quartic") {
    double err[2];
    const int sizes[2] = {33, 65};
    for (int q = 0; q < 2; ++q) {
        const Grid g = make_grid(0.0, sizes[q]);
        ScalarField exact = exact_quadratic(g, 0.5, 0.5);
        for (int i = 0; i < g.n; ++i)
            for (int j = 0; j < g.n; ++j)
                exact.at(i, j) += harmonic_quartic(g.x1(i), g.x2(j));
        ScalarField data = exact;
        for (int i = 1; i + 1 < g.n; ++i)
            for (int j = 1; j + 1 < g.n; ++j) data.at(i, j) = 0.0;
        MixedBvpOptions opts;
        opts.tol = 1e-11;
        const ScalarField v = solve_mixed_bvp(interior_mask(g), data,
                                              {false, false, false, false},
                                              opts);
        err[q] = sup_diff(v, exact);
    }
    CHECK(err[0] > 0.0);
    CHECK(err[0] / err[1] >= 3.4);  // order >= 1.8 under mesh halving
}

TEST_CASE("mixed BVP rejects ill-posed setups") {
    const Grid g = make_grid(0.0, 17);
    const ScalarField zero(g);

    SUBCASE("all-Neumann with full mask is singular") {
        std::vector<char> m(g.num_nodes(), 1);
        CHECK_THROWS_AS(solve_mixed_bvp(m, zero, {true, true, true, true}),
                        std::invalid_argument);
    }

    SUBCASE("mask touching a side with no condition") {
        std::vector<char> m(g.num_nodes(), 0);
        m[g.index(g.n - 1, g.n - 1)] = 1;
        m[g.index(g.n - 2, g.n - 1)] = 1;
        CHECK_THROWS_AS(solve_mixed_bvp(m, zero, {true, false, false, true}),
                        std::invalid_argument);
    }
}

TEST_CASE("mixed BVP agrees with the obstacle solve at a = 0") {
    const Grid g = make_grid(0.0, 65);
    const ObstacleSolution sol = solve_a0(g);
    REQUIRE(sol.converged);

    std::vector<char> m(g.num_nodes(), 0);
    for (int k = 0; k < g.num_nodes(); ++k) m[k] = !sol.contact[k];
    const ScalarField zero(g);
    const ScalarField v = solve_mixed_bvp(m, zero, {true, true, true, true});
    CHECK(sup_diff(v, sol.v, &m) <= 5.0 * g.h());
}

TEST_CASE("blunt candidate geometry at a = 2.5") {
    const Grid g = make_grid(2.5, 65);
    const double h = g.h();
    const CandidateSolution c =
        assemble_candidate(g, -M_PI / 4, 3.08, {0.0, 0.3, 0.25, 0.18, 0.12,
                                                0.0});
    REQUIRE(c.blunt);
    REQUIRE(c.has_fan);
    CHECK(c.r_knots[0] == doctest::Approx((3.08 - 2.5) / std::sqrt(2.0)));

    // the exclusion hypotenuse sits on x1 + x2 = s(a)
    double maxsum = 0.0;
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j)
            if (c.region[g.index(i, j)] == 0)
                maxsum = std::max(maxsum, g.x1(i) + g.x2(j));
    CHECK(std::abs(maxsum - 5.18925479) <= h);
    CHECK(c.omega0_polygon.size() == 3);

    // mirror symmetry across the diagonal
    double asym = 0.0;
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < i; ++j)
            asym = std::max(asym, std::abs(c.u.at(i, j) - c.u.at(j, i)));
    CHECK(asym <= 1e-9);

    const ResidualReport r = free_boundary_residuals(c);
    CHECK(r.r_exclusion == 0.0);  // the blunt corner never touches Omega2
    CHECK(r.r_fixed > 0.0);
    CHECK(r.r_interface > 0.0);

    SUBCASE("exclusion offset moves the hypotenuse") {
        AssembleOptions opts;
        opts.s0_offset = 0.05;
        const CandidateSolution cs = assemble_candidate(
            g, -M_PI / 4, 3.08, {0.0, 0.3, 0.25, 0.18, 0.12, 0.0}, opts);
        double ms = 0.0;
        for (int i = 0; i < g.n; ++i)
            for (int j = 0; j < g.n; ++j)
                if (cs.region[g.index(i, j)] == 0)
                    ms = std::max(ms, g.x1(i) + g.x2(j));
        CHECK(ms >= maxsum);
        CHECK(std::abs((ms - maxsum) - 0.05) <= h);
    }

    SUBCASE("strip too thin to exist") {
        CHECK_THROWS_WITH(
            assemble_candidate(g, -M_PI / 4, 2.52, {0.0, 0.1}),
            doctest::Contains("geometry overlap"));
    }
}

TEST_CASE("candidate validation") {
    const Grid g = make_grid(2.5, 33);
    CHECK_THROWS_AS(assemble_candidate(g, 0.1, 3.0, {0.1}),
                    std::invalid_argument);
    CHECK_THROWS_AS(assemble_candidate(g, -M_PI / 4, 2.4, {0.1}),
                    std::invalid_argument);
    CHECK_THROWS_AS(assemble_candidate(g, -M_PI / 4, 3.0, {}),
                    std::invalid_argument);
    CHECK_THROWS_AS(assemble_candidate(g, -M_PI / 4, 3.0, {0.8}),
                    std::invalid_argument);
}

TEST_CASE("fitted blunt candidate matches the direct minimizer at a = 2.5") {
    const Grid g = make_grid(2.5, 65);
    const double h = g.h();

    const FitResult fr = fit_free_boundary(g, 2.5);
    REQUIRE(fr.candidate.blunt);
    CHECK(fr.candidate.theta0 == doctest::Approx(-M_PI / 4));
    CHECK(fr.candidate.s0 == doctest::Approx(5.18925479).epsilon(1e-7));
    CHECK(fr.candidate.r_knots.back() == 0.0);
    CHECK(fr.objective <= 0.35);
    CHECK(fr.residuals.r_exclusion == 0.0);
    for (size_t q = 1; q < fr.trace.size(); ++q)
        CHECK(fr.trace[q] <= fr.trace[q - 1] + 1e-12);

    // west column crosses Omega0, then the bunching pieces, then Omega2
    bool ordered = true;
    for (int j = 1; j < g.n; ++j)
        ordered = ordered && fr.candidate.region[g.index(0, j)] >=
                                 fr.candidate.region[g.index(0, j - 1)];
    CHECK(ordered);
    CHECK(fr.candidate.region[g.index(0, 0)] == 0);
    CHECK(fr.candidate.region[g.index(0, g.n - 1)] == 2);

    // off-origin squares converge slowly; the direct solve needs headroom
    SolveOptions sopts;
    sopts.max_iters = 800000;
    const SolveResult direct = minimize(g, make_stencil(g), sopts);
    REQUIRE(direct.converged);

    CHECK(sup_diff(fr.candidate.u, direct.u) <= 10.0 * h);
    CHECK(energy(fr.candidate.u) >= direct.energy - 10.0 * h);
    CHECK(energy(fr.candidate.u) - direct.energy <= 10.0 * h);
}

TEST_CASE("tapered fit at small a stays sharp") {
    const Grid g = make_grid(0.05, 33);
    FitOptions opts;
    opts.knots = 4;
    opts.max_rounds = 2;
    const FitResult fr = fit_free_boundary(g, 0.05, opts);
    CHECK_FALSE(fr.candidate.blunt);
    CHECK(fr.candidate.theta0 > -M_PI / 4 + 1e-6);
    CHECK(fr.candidate.omega0_polygon.size() == 4);
    for (size_t q = 1; q < fr.trace.size(); ++q)
        CHECK(fr.trace[q] <= fr.trace[q - 1] + 1e-12);
}

TEST_CASE("candidate bundle round trip") {
    const Grid g = make_grid(2.5, 33);
    const CandidateSolution c =
        assemble_candidate(g, -M_PI / 4, 3.05, {0.0, 0.2, 0.1, 0.0});
    const ResidualReport r = free_boundary_residuals(c);
    const std::string dir = "assembler_bundle_tmp";
    write_candidate_bundle(c, r, dir);

    const ScalarField u = read_field(dir + "/u.csv");
    CHECK(u.grid.n == g.n);
    CHECK(sup_diff(u, c.u) <= 1e-12);

    auto slurp = [](const std::string& path) {
        std::FILE* fp = std::fopen(path.c_str(), "r");
        REQUIRE(fp);
        std::string s;
        char buf[4096];
        size_t got;
        while ((got = std::fread(buf, 1, sizeof buf, fp)) > 0)
            s.append(buf, got);
        std::fclose(fp);
        return s;
    };
    CHECK(slurp(dir + "/regions.csv").find("# monopolist-field v1") == 0);
    CHECK(slurp(dir + "/omega0.json").find("\"polygon\"") !=
          std::string::npos);
    CHECK(slurp(dir + "/residuals.json").find("\"objective\"") !=
          std::string::npos);
    std::filesystem::remove_all(dir);
}
