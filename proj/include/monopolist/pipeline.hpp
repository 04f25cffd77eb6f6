#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "monopolist/grid.hpp"
#include "monopolist/regions.hpp"
#include "monopolist/solver.hpp"

namespace monopolist {

// Tolerances used by run_verify; the length-scale factors multiply the grid
// spacing of the artifact being checked.
struct VerifyTolerances {
    double mass_lo = 0.98, mass_hi = 1.02;
    double neumann_factor = 5.0;  // min non-corner (Du-x).n >= -factor * h
    double moment_factor = 10.0;  // median leaf moment residual <= factor * h
};

struct RunConfig {
    double a = 0.0;
    int n = 65;
    std::string mode = "solve";  // solve|ode|assemble|scan|verify|export
    std::string out = "artifacts";
    SolveOptions solver;
    Thresholds thresholds;
    VerifyTolerances verify;

    // scan
    double scan_a_min = 0.0, scan_a_max = 3.0;
    int scan_steps = 13;

    // ode (h0 = 0 picks a + 0.5)
    double ode_theta0 = -0.78539816339744831, ode_h0 = 0.0, ode_r0 = 0.3;
    double ode_step = 1e-3;

    // assemble
    int fit_knots = 6;
    int fit_rounds = 8;

    // export
    std::string export_input, export_format = "csv", export_output;

    std::string source_json;  // echoed verbatim into the artifact directory
};

RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);

struct RegimeRecord {
    double a = 0.0;
    int n = 0;
    char regime = 'B';  // A: no bunching, B: targeted only, C: blunt
    std::array<double, 3> areas{};
    double mass_balance = 0.0;
    double neumann_min = 0.0;  // worst non-corner boundary sign violation
    double energy = 0.0;
    bool converged = true;
};

// A if area(Omega1) <= 2h or no ray spans at least three grid cells; C if
// the family of rays near angle -pi/4 (or the south-side mirror 3pi/4) that
// strictly cross the corner diagonal covers a band of diagonal offsets at
// least three cells wide; else B.
char classify_regime(const RegionMasks& masks, const RayExtraction& rays);

struct SolveArtifacts {
    RegimeRecord record;
    std::string dir;
};

// Solve, classify, extract rays, and persist u.csv / regions.csv / rays.json
// / summary.json (plus config.json when the config carries source text).
// Non-convergence is recorded, never thrown; partial artifacts remain valid.
SolveArtifacts run_solve(const RunConfig& config);

struct ScanResult {
    std::vector<RegimeRecord> records;
    // first adjacent pair where the regime flips to C, when present
    std::optional<std::array<double, 2>> bracket;
};

// Evenly spaced a in [a_min, a_max]; entries run on a worker pool capped by
// MONOPOLIST_THREADS, each writing to <out>/a_<value>.
ScanResult run_scan(double a_min, double a_max, int steps,
                    const RunConfig& base);

struct VerifyCheck {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double threshold = 0.0;
};

struct VerifyReport {
    std::vector<VerifyCheck> checks;
    bool all_pass = false;
    int exit_code = 0;  // 0 pass, 3 check failure, 4 missing artifacts
    std::string json() const;
};

// Recomputes the diagnostics from the persisted field (never trusts the
// stored summary) and writes verify_report.json next to it.
VerifyReport run_verify(const std::string& dir,
                        const VerifyTolerances& tol = {});

// Lossless re-encoding between csv, json, and gnuplot-matrix; the input
// format is detected from the file content.
void export_field(const std::string& input, const std::string& format,
                  const std::string& output);

}  // namespace monopolist
