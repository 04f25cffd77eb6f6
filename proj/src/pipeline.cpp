#include "monopolist/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "monopolist/leaf.hpp"
#include "monopolist/square_ode.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace monopolist {

namespace {

double region_area(const RegionMasks& m, RegionLabel l) {
    const Grid& g = m.grid;
    const double h = g.h();
    double area = 0.0;
    for (int i = 0; i < g.n; ++i) {
        const double wi = (i == 0 || i + 1 == g.n) ? 0.5 : 1.0;
        for (int j = 0; j < g.n; ++j) {
            const double wj = (j == 0 || j + 1 == g.n) ? 0.5 : 1.0;
            if (m.labels[g.index(i, j)] == l) area += wi * wj * h * h;
        }
    }
    return area;
}

double neumann_min_noncorner(const ScalarField& u) {
    const BoundaryTrace tr = boundary_normal_residual(u);
    double worst = 0.0;
    for (const auto& nd : tr.nodes)
        if (!nd.corner) worst = std::min(worst, nd.value);
    return worst;
}

// Blunt rays (theta = -pi/4, both ends on the boundary) fall outside the
// smooth-family hypotheses; the moment identities are checked on the rest.
bool tame_ray(const LeafFamily& fam, int k) {
    const double gap = std::min(std::abs(fam.theta[k] + M_PI / 4),
                                std::abs(fam.theta[k] - 3 * M_PI / 4));
    return fam.f_xi[k] > 0.3 && gap > 0.05;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

RegimeRecord make_record(const SolveResult& res, const RegionMasks& masks,
                         const RayExtraction& rays) {
    RegimeRecord rec;
    rec.a = res.u.grid.a;
    rec.n = res.u.grid.n;
    rec.regime = classify_regime(masks, rays);
    rec.areas = {region_area(masks, OMEGA0), region_area(masks, OMEGA1),
                 region_area(masks, OMEGA2)};
    rec.mass_balance = sigma_mass_balance(res.u, &masks).total;
    rec.neumann_min = neumann_min_noncorner(res.u);
    rec.energy = res.energy;
    rec.converged = res.converged;
    return rec;
}

json summary_json(const RegimeRecord& rec, const SolveResult& res,
                  const RegionMasks& masks) {
    json s;
    s["a"] = rec.a;
    s["n"] = rec.n;
    s["regime"] = std::string(1, rec.regime);
    s["areas"] = rec.areas;
    s["mass_balance"] = rec.mass_balance;
    s["neumann_min"] = rec.neumann_min;
    s["energy"] = rec.energy;
    s["residuals"] = {
        {"converged", res.converged},
        {"iterations", res.iterations},
        {"feas_convex", res.feas_convex},
        {"feas_nonneg", res.feas_nonneg},
        {"poisson_violation_fraction", masks.poisson_violation_fraction},
    };
    return s;
}

ScalarField read_field_json(const std::string& path) {
    const json doc = json::parse(slurp(path));
    const Grid g = make_grid(doc.at("a").get<double>(),
                             doc.at("n").get<int>());
    ScalarField u(g);
    const auto& rows = doc.at("values");
    if ((int)rows.size() != g.n) throw std::runtime_error("bad row count");
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j)
            u.at(i, j) = rows[i][j].get<double>();
    return u;
}

ScalarField read_any_field(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    char c = 0;
    in >> c;
    return c == '{' ? read_field_json(path) : read_field(path);
}

int worker_count(int jobs) {
    int cap = (int)std::thread::hardware_concurrency();
    if (cap <= 0) cap = 1;
    if (const char* env = std::getenv("MONOPOLIST_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) cap = std::min(cap, v);
    }
    return std::max(1, std::min(jobs, cap));
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    const json doc = json::parse(text);
    RunConfig c;
    c.source_json = text;
    c.a = doc.value("a", c.a);
    c.n = doc.value("n", c.n);
    c.mode = doc.value("mode", c.mode);
    c.out = doc.value("out", c.out);
    if (doc.contains("solver")) {
        const auto& s = doc["solver"];
        c.solver.max_iters = s.value("max_iters", c.solver.max_iters);
        c.solver.tol_energy = s.value("tol_energy", c.solver.tol_energy);
        c.solver.tol_feas = s.value("tol_feas", c.solver.tol_feas);
        c.solver.deterministic =
            s.value("deterministic", c.solver.deterministic);
    }
    if (doc.contains("thresholds")) {
        const auto& t = doc["thresholds"];
        c.thresholds.eps0 = t.value("eps0", c.thresholds.eps0);
        c.thresholds.eps1 = t.value("eps1", c.thresholds.eps1);
        c.thresholds.eps2 = t.value("eps2", c.thresholds.eps2);
    }
    if (doc.contains("verify")) {
        const auto& v = doc["verify"];
        c.verify.mass_lo = v.value("mass_lo", c.verify.mass_lo);
        c.verify.mass_hi = v.value("mass_hi", c.verify.mass_hi);
        c.verify.neumann_factor =
            v.value("neumann_factor", c.verify.neumann_factor);
        c.verify.moment_factor =
            v.value("moment_factor", c.verify.moment_factor);
    }
    if (doc.contains("scan")) {
        const auto& s = doc["scan"];
        c.scan_a_min = s.value("a_min", c.scan_a_min);
        c.scan_a_max = s.value("a_max", c.scan_a_max);
        c.scan_steps = s.value("steps", c.scan_steps);
    }
    if (doc.contains("ode")) {
        const auto& o = doc["ode"];
        c.ode_theta0 = o.value("theta0", c.ode_theta0);
        c.ode_h0 = o.value("h0", c.ode_h0);
        c.ode_r0 = o.value("r0", c.ode_r0);
        c.ode_step = o.value("step", c.ode_step);
    }
    if (doc.contains("assemble")) {
        const auto& f = doc["assemble"];
        c.fit_knots = f.value("knots", c.fit_knots);
        c.fit_rounds = f.value("rounds", c.fit_rounds);
    }
    if (doc.contains("export")) {
        const auto& e = doc["export"];
        c.export_input = e.value("input", c.export_input);
        c.export_format = e.value("format", c.export_format);
        c.export_output = e.value("output", c.export_output);
    }
    static const char* modes[] = {"solve", "ode",    "assemble",
                                  "scan",  "verify", "export"};
    if (std::find_if(std::begin(modes), std::end(modes), [&](const char* m) {
            return c.mode == m;
        }) == std::end(modes))
        throw std::invalid_argument("unknown mode: " + c.mode);
    return c;
}

RunConfig load_config(const std::string& path) {
    return parse_config(slurp(path));
}

char classify_regime(const RegionMasks& masks, const RayExtraction& rays) {
    const Grid& g = masks.grid;
    const double h = g.h();
    bool any_long_ray = false;
    for (const Ray& r : rays.rays)
        if (r.R >= 3.0 * h) any_long_ray = true;
    if (region_area(masks, OMEGA1) <= 2.0 * h || !any_long_ray) return 'A';

    // Blunt bunching shows up as a family of near-diagonal rays whose
    // leaves straddle the corner diagonal across a macroscopic band.  A
    // single straddling ray is indistinguishable from discretisation noise
    // near the diagonal, so require the family's diagonal offsets to spread
    // over at least three cells.
    double off_lo = std::numeric_limits<double>::infinity();
    double off_hi = -off_lo;
    for (const Ray& r : rays.rays) {
        const double gap = std::min(std::abs(r.theta + M_PI / 4),
                                    std::abs(r.theta - 3 * M_PI / 4));
        if (gap > 0.05 || r.R < 3.0 * h) continue;
        const double t1 = r.foot[0] + r.R * r.xi[0];
        const double t2 = r.foot[1] + r.R * r.xi[1];
        const double df = r.foot[0] - r.foot[1];
        const double dt = t1 - t2;
        if (df * dt >= 0.0 || std::abs(df) <= 2.0 * h ||
            std::abs(dt) <= 2.0 * h)
            continue;  // does not strictly cross the diagonal
        const double off = 0.5 * (r.foot[0] + r.foot[1] + t1 + t2);
        off_lo = std::min(off_lo, off);
        off_hi = std::max(off_hi, off);
    }
    if (off_hi - off_lo >= 3.0 * h) return 'C';
    return 'B';
}

SolveArtifacts run_solve(const RunConfig& config) {
    const Grid g = make_grid(config.a, config.n);
    const SolveResult res = minimize(g, make_stencil(g), config.solver);
    const RegionMasks masks = classify_regions(res.u, config.thresholds);
    const RayExtraction rays = extract_rays(res.u, masks);

    fs::create_directories(config.out);
    write_field(res.u, config.out + "/u.csv");
    write_labels(masks, config.out + "/regions.csv");
    spit(config.out + "/rays.json", rays_to_json(rays));

    const RegimeRecord rec = make_record(res, masks, rays);
    spit(config.out + "/summary.json",
         summary_json(rec, res, masks).dump(2) + "\n");
    if (!config.source_json.empty())
        spit(config.out + "/config.json", config.source_json);
    return {rec, config.out};
}

ScanResult run_scan(double a_min, double a_max, int steps,
                    const RunConfig& base) {
    if (!(a_min >= 0.0 && a_min < a_max))
        throw std::invalid_argument("need 0 <= a_min < a_max");
    if (steps < 2) throw std::invalid_argument("need at least 2 steps");

    ScanResult out;
    out.records.resize(steps);
    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    std::string error;
    std::mutex error_mutex;

    auto work = [&] {
        for (;;) {
            const int q = next.fetch_add(1);
            if (q >= steps || failed.load()) return;
            RunConfig sub = base;
            sub.a = a_min + (a_max - a_min) * q / (steps - 1);
            char name[64];
            std::snprintf(name, sizeof name, "%s/a_%g", base.out.c_str(),
                          sub.a);
            sub.out = name;
            try {
                out.records[q] = run_solve(sub).record;
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lk(error_mutex);
                error = e.what();
                failed.store(true);
            }
        }
    };

    std::vector<std::thread> pool;
    for (int w = 0; w < worker_count(steps); ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
    if (failed.load()) throw std::runtime_error("scan entry failed: " + error);

    for (int q = 1; q < steps; ++q)
        if (out.records[q].regime == 'C' && out.records[q - 1].regime != 'C') {
            out.bracket = {{out.records[q - 1].a, out.records[q].a}};
            break;
        }
    return out;
}

std::string VerifyReport::json() const {
    nlohmann::json doc;
    doc["all_pass"] = all_pass;
    doc["exit_code"] = exit_code;
    doc["checks"] = nlohmann::json::array();
    for (const auto& c : checks)
        doc["checks"].push_back({{"name", c.name},
                                 {"pass", c.pass},
                                 {"value", c.value},
                                 {"threshold", c.threshold}});
    return doc.dump(2) + "\n";
}

VerifyReport run_verify(const std::string& dir, const VerifyTolerances& tol) {
    VerifyReport rep;
    if (!fs::exists(dir + "/u.csv")) {
        rep.all_pass = false;
        rep.exit_code = 4;
        return rep;
    }

    const ScalarField u = read_field(dir + "/u.csv");
    const Grid& g = u.grid;
    const double h = g.h();
    const RegionMasks masks = classify_regions(u);

    const SigmaBalance bal = sigma_mass_balance(u, &masks);
    rep.checks.push_back({"mass_balance",
                          bal.total >= tol.mass_lo && bal.total <= tol.mass_hi,
                          bal.total, tol.mass_hi});

    const double worst = neumann_min_noncorner(u);
    rep.checks.push_back({"neumann_sign", worst >= -tol.neumann_factor * h,
                          worst, tol.neumann_factor * h});

    // interior Poisson residual on Omega2 (median: seam and kink nodes are
    // legitimately off by O(1/h) on a measure-zero set)
    {
        const TensorField hess = hessian(u);
        std::vector<double> dev;
        for (int k = 0; k < g.num_nodes(); ++k)
            if (masks.labels[k] == OMEGA2)
                dev.push_back(std::abs(hess.d11[k] + hess.d22[k] - 3.0));
        if (!dev.empty()) {
            std::nth_element(dev.begin(), dev.begin() + dev.size() / 2,
                             dev.end());
            const double med = dev[dev.size() / 2];
            rep.checks.push_back({"poisson_residual",
                                  med <= tol.moment_factor * h, med,
                                  tol.moment_factor * h});
        }
    }

    const RayExtraction rays = extract_rays(u, masks);
    std::vector<double> res0, res1;
    for (const LeafFamily& fam : make_leaf_families(rays.rays))
        for (int k = 0; k < fam.size(); ++k) {
            if (!tame_ray(fam, k)) continue;
            const auto mr = moment_residuals(fam, k, u);
            res0.push_back(std::abs(mr[0]));
            res1.push_back(std::abs(mr[1]));
        }
    if (res0.size() >= 3) {
        auto median = [](std::vector<double> v) {
            std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
            return v[v.size() / 2];
        };
        const double med = std::max(median(res0), median(res1));
        rep.checks.push_back({"moment_residuals",
                              med <= tol.moment_factor * h, med,
                              tol.moment_factor * h});
    }

    if (fs::exists(dir + "/profile.csv")) {
        LeafProfile p;
        std::ifstream in(dir + "/profile.csv");
        std::string line;
        std::getline(in, line);  // header
        while (std::getline(in, line)) {
            double th, m, mp, hh, b, R;
            if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf", &th, &m,
                            &mp, &hh, &b, &R) != 6)
                continue;
            p.theta.push_back(th);
            p.m.push_back(m);
            p.mp.push_back(mp);
            p.h.push_back(hh);
            p.b.push_back(b);
            p.R.push_back(R);
        }
        if (p.size() >= 3) {
            p.a = g.a;
            p.theta0 = p.theta.front();
            p.h0 = p.h.front();
            p.R0 = p.R.front();
            const StingrayCurve sc = stingray_curve(p);
            double min_slope = sc.slope.empty() ? 0.0 : sc.slope.front();
            double min_dslope = 0.0;
            for (double s : sc.slope) min_slope = std::min(min_slope, s);
            for (double d : sc.slope_dtheta)
                min_dslope = std::min(min_dslope, d);
            rep.checks.push_back({"stingray_slope_positive", min_slope > 0.0,
                                  min_slope, 0.0});
            rep.checks.push_back({"stingray_slope_increasing",
                                  min_dslope >= -1e-9, min_dslope, 0.0});
        }
    }

    if (masks.count(OMEGA0) > 0) {
        // discrete convexity of the exclusion set: rows contiguous and row
        // widths monotone, each with one cell of classification slack
        int violations = 0;
        int prev_width = g.n + 1;
        for (int i = 0; i < g.n; ++i) {
            int lo = g.n, hi = -1, cnt = 0;
            for (int j = 0; j < g.n; ++j)
                if (masks.labels[g.index(i, j)] == OMEGA0) {
                    lo = std::min(lo, j);
                    hi = std::max(hi, j);
                    ++cnt;
                }
            if (cnt == 0) continue;
            if (hi - lo + 1 - cnt > 1) ++violations;
            if (cnt > prev_width + 1) ++violations;
            prev_width = cnt;
        }
        rep.checks.push_back({"omega0_convexity", violations == 0,
                              (double)violations, 0.0});
    }

    rep.all_pass = std::all_of(rep.checks.begin(), rep.checks.end(),
                               [](const VerifyCheck& c) { return c.pass; });
    rep.exit_code = rep.all_pass ? 0 : 3;
    spit(dir + "/verify_report.json", rep.json());
    return rep;
}

void export_field(const std::string& input, const std::string& format,
                  const std::string& output) {
    const ScalarField u = read_any_field(input);
    const Grid& g = u.grid;
    if (format == "csv") {
        write_field(u, output);
    } else if (format == "json") {
        json doc;
        doc["n"] = g.n;
        doc["a"] = g.a;
        auto rows = json::array();
        for (int i = 0; i < g.n; ++i) {
            auto row = json::array();
            for (int j = 0; j < g.n; ++j) row.push_back(u.at(i, j));
            rows.push_back(std::move(row));
        }
        doc["values"] = std::move(rows);
        spit(output, doc.dump() + "\n");
    } else if (format == "gnuplot-matrix") {
        std::FILE* fp = std::fopen(output.c_str(), "w");
        if (!fp) throw std::runtime_error("cannot write " + output);
        for (int i = 0; i < g.n; ++i)
            for (int j = 0; j < g.n; ++j)
                std::fprintf(fp, "%.17g%c", u.at(i, j),
                             j + 1 == g.n ? '\n' : ' ');
        std::fclose(fp);
    } else {
        throw std::invalid_argument("unknown format: " + format);
    }
}

}  // namespace monopolist
