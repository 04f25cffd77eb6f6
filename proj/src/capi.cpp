#include "monopolist.h"

#include <cstring>
#include <exception>
#include <string>

#include "json.hpp"
#include "monopolist/assembler.hpp"
#include "monopolist/grid.hpp"
#include "monopolist/pipeline.hpp"
#include "monopolist/square_ode.hpp"

using namespace monopolist;

struct mono_field {
    ScalarField f;
};

struct mono_summary {
    RegimeRecord rec;
};

namespace {

thread_local std::string g_last_error;

int fail(int code, const std::string& what) {
    g_last_error = what;
    return code;
}

// Map C++ failures onto the coarse C error codes: argument/config problems
// are INVALID, everything touching files is IO.
template <typename Fn>
int guarded(int io_or_invalid, Fn&& fn) {
    try {
        return fn();
    } catch (const std::invalid_argument& e) {
        return fail(MONO_ERR_INVALID, e.what());
    } catch (const nlohmann::json::exception& e) {
        return fail(MONO_ERR_INVALID, e.what());
    } catch (const std::exception& e) {
        return fail(io_or_invalid, e.what());
    }
}

RunConfig config_from(const char* json_text) {
    if (!json_text || !*json_text) return RunConfig{};
    return parse_config(json_text);
}

}  // namespace

extern "C" {

const char* mono_last_error(void) { return g_last_error.c_str(); }

void mono_string_free(char* s) { delete[] s; }

int mono_field_read(const char* path, mono_field** out) {
    if (!path || !out) return fail(MONO_ERR_INVALID, "null argument");
    return guarded(MONO_ERR_IO, [&]() -> int {
        *out = new mono_field{read_field(path)};
        return MONO_OK;
    });
}

int mono_field_write(const mono_field* f, const char* path) {
    if (!f || !path) return fail(MONO_ERR_INVALID, "null argument");
    return guarded(MONO_ERR_IO, [&]() -> int {
        write_field(f->f, path);
        return MONO_OK;
    });
}

int mono_field_shape(const mono_field* f, int* n, double* a) {
    if (!f) return fail(MONO_ERR_INVALID, "null field");
    if (n) *n = f->f.grid.n;
    if (a) *a = f->f.grid.a;
    return MONO_OK;
}

int mono_field_values(const mono_field* f, const double** data) {
    if (!f || !data) return fail(MONO_ERR_INVALID, "null argument");
    *data = f->f.values.data();
    return MONO_OK;
}

void mono_field_free(mono_field* f) { delete f; }

int mono_run_solve(const char* config_json, mono_summary** out) {
    if (!out) return fail(MONO_ERR_INVALID, "null output");
    *out = nullptr;
    return guarded(MONO_ERR_IO, [&]() -> int {
        const SolveArtifacts art = run_solve(config_from(config_json));
        *out = new mono_summary{art.record};
        if (!art.record.converged)
            return fail(MONO_ERR_SOLVER,
                        "solver did not converge; partial artifacts in " +
                            art.dir);
        return MONO_OK;
    });
}

int mono_summary_regime(const mono_summary* s, char* regime) {
    if (!s || !regime) return fail(MONO_ERR_INVALID, "null argument");
    *regime = s->rec.regime;
    return MONO_OK;
}

int mono_summary_areas(const mono_summary* s, double areas[3]) {
    if (!s || !areas) return fail(MONO_ERR_INVALID, "null argument");
    for (int q = 0; q < 3; ++q) areas[q] = s->rec.areas[q];
    return MONO_OK;
}

int mono_summary_scalars(const mono_summary* s, double* mass_balance,
                         double* neumann_min, double* energy) {
    if (!s) return fail(MONO_ERR_INVALID, "null summary");
    if (mass_balance) *mass_balance = s->rec.mass_balance;
    if (neumann_min) *neumann_min = s->rec.neumann_min;
    if (energy) *energy = s->rec.energy;
    return MONO_OK;
}

void mono_summary_free(mono_summary* s) { delete s; }

int mono_run_scan(double a_min, double a_max, int steps,
                  const char* config_json, char** table_json) {
    if (!table_json) return fail(MONO_ERR_INVALID, "null output");
    *table_json = nullptr;
    return guarded(MONO_ERR_IO, [&]() -> int {
        const ScanResult sc = run_scan(a_min, a_max, steps,
                                       config_from(config_json));
        nlohmann::json doc;
        doc["records"] = nlohmann::json::array();
        for (const RegimeRecord& r : sc.records)
            doc["records"].push_back({{"a", r.a},
                                      {"n", r.n},
                                      {"regime", std::string(1, r.regime)},
                                      {"areas", r.areas},
                                      {"mass_balance", r.mass_balance},
                                      {"neumann_min", r.neumann_min},
                                      {"energy", r.energy},
                                      {"converged", r.converged}});
        if (sc.bracket)
            doc["bracket"] = {(*sc.bracket)[0], (*sc.bracket)[1]};
        const std::string text = doc.dump(2) + "\n";
        *table_json = new char[text.size() + 1];
        std::memcpy(*table_json, text.c_str(), text.size() + 1);
        return MONO_OK;
    });
}

int mono_run_verify(const char* dir, const char* config_json) {
    if (!dir) return fail(MONO_ERR_INVALID, "null directory");
    return guarded(MONO_ERR_IO, [&]() -> int {
        const VerifyReport rep =
            run_verify(dir, config_from(config_json).verify);
        if (rep.exit_code == 4)
            return fail(MONO_ERR_IO, std::string("missing artifacts in ") +
                                         dir);
        if (rep.exit_code != 0) {
            std::string failing;
            for (const auto& c : rep.checks)
                if (!c.pass) failing += (failing.empty() ? "" : ", ") + c.name;
            return fail(MONO_ERR_VERIFY, "failed checks: " + failing);
        }
        return MONO_OK;
    });
}

int mono_export_field(const char* input, const char* format,
                      const char* output) {
    if (!input || !format || !output)
        return fail(MONO_ERR_INVALID, "null argument");
    return guarded(MONO_ERR_IO,
                   [&] {
                       export_field(input, format, output);
                       return MONO_OK;
                   });
}

int mono_run_ode(double a, double theta0, double h0, double r0, double step,
                 const char* csv_path) {
    if (!csv_path) return fail(MONO_ERR_INVALID, "null path");
    return guarded(MONO_ERR_IO, [&]() -> int {
        if (h0 <= 0.0) h0 = a + 0.5;
        const LeafProfile p = integrate_slope_el(
            a, theta0, h0, r0, [r0](double) { return r0; }, step);
        write_profile_csv(p, csv_path);
        return MONO_OK;
    });
}

int mono_run_assemble(const char* config_json, double* objective) {
    return guarded(MONO_ERR_IO, [&]() -> int {
        const RunConfig cfg = config_from(config_json);
        const Grid g = make_grid(cfg.a, cfg.n);
        FitOptions opts;
        opts.knots = cfg.fit_knots;
        opts.max_rounds = cfg.fit_rounds;
        const FitResult fr = fit_free_boundary(g, cfg.a, opts);
        write_candidate_bundle(fr.candidate, fr.residuals, cfg.out);
        if (objective) *objective = fr.objective;
        return MONO_OK;
    });
}

}  // extern "C"
