// Command-line front end; all numerical work goes through the C API.
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "monopolist.h"

namespace {

using nlohmann::json;

struct Cli {
    std::string config_path;
    double a = -1.0;  // negative: not set on the command line
    int n = 0;
    std::string out;
};

// Config file first, then flags on top; flags win.
json merged_config(const Cli& cli, const std::string& mode) {
    json doc = json::object();
    if (!cli.config_path.empty()) {
        std::ifstream in(cli.config_path);
        if (!in) throw CLI::RuntimeError("cannot read " + cli.config_path, 4);
        std::ostringstream ss;
        ss << in.rdbuf();
        doc = json::parse(ss.str());
    }
    doc["mode"] = mode;
    if (cli.a >= 0.0) doc["a"] = cli.a;
    if (cli.n > 0) doc["n"] = cli.n;
    if (!cli.out.empty()) doc["out"] = cli.out;
    return doc;
}

int report(int rc) {
    if (rc != MONO_OK) std::fprintf(stderr, "error: %s\n", mono_last_error());
    return rc;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical laboratory for the monopolist's problem"};
    app.require_subcommand(1);

    Cli cli;
    app.add_option("--config", cli.config_path, "JSON config file");
    app.add_option("--a", cli.a, "square offset (overrides config)");
    app.add_option("--n", cli.n, "nodes per side (overrides config)");
    app.add_option("--out", cli.out, "output directory (overrides config)");

    auto* solve = app.add_subcommand("solve", "minimize and classify");

    auto* ode = app.add_subcommand("ode", "integrate a leaf profile");
    double theta0 = -0.78539816339744831, h0 = 0.0, r0 = 0.3, step = 1e-3;
    std::string ode_out = "profile.csv";
    ode->add_option("--theta0", theta0, "starting angle");
    ode->add_option("--h0", h0, "starting foot height (0: a + 0.5)");
    ode->add_option("--r0", r0, "ray length");
    ode->add_option("--step", step, "integration step");
    ode->add_option("--profile-out", ode_out, "profile CSV path");

    auto* assemble = app.add_subcommand("assemble", "fit the free boundary");

    auto* scan = app.add_subcommand("scan", "regime scan over a");
    double a_min = 0.0, a_max = 3.0;
    int steps = 13;
    scan->add_option("--a-min", a_min, "scan start");
    scan->add_option("--a-max", a_max, "scan end");
    scan->add_option("--steps", steps, "number of samples");

    auto* verify = app.add_subcommand("verify", "re-check an artifact dir");
    std::string dir;
    verify->add_option("dir", dir, "artifact directory")->required();

    auto* exp = app.add_subcommand("export", "re-encode a field file");
    std::string input, format = "csv", output;
    exp->add_option("input", input, "field file (csv or json)")->required();
    exp->add_option("--format", format, "csv | json | gnuplot-matrix");
    exp->add_option("output", output, "destination path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve->parsed()) {
            const std::string cfg = merged_config(cli, "solve").dump();
            mono_summary* s = nullptr;
            const int rc = mono_run_solve(cfg.c_str(), &s);
            if (s) {
                char regime = '?';
                double areas[3] = {0, 0, 0}, mass = 0, nmin = 0, energy = 0;
                mono_summary_regime(s, &regime);
                mono_summary_areas(s, areas);
                mono_summary_scalars(s, &mass, &nmin, &energy);
                std::printf(
                    "regime %c  areas %.4f/%.4f/%.4f  mass %.4f  "
                    "neumann_min %.2e  energy %.9f\n",
                    regime, areas[0], areas[1], areas[2], mass, nmin, energy);
                mono_summary_free(s);
            }
            return report(rc);
        }
        if (ode->parsed()) {
            const json cfg = merged_config(cli, "ode");
            return report(mono_run_ode(cfg.value("a", 0.5), theta0, h0, r0,
                                       step, ode_out.c_str()));
        }
        if (assemble->parsed()) {
            const std::string cfg = merged_config(cli, "assemble").dump();
            double objective = 0.0;
            const int rc = mono_run_assemble(cfg.c_str(), &objective);
            if (rc == MONO_OK)
                std::printf("fit objective %.6f\n", objective);
            return report(rc);
        }
        if (scan->parsed()) {
            const std::string cfg = merged_config(cli, "scan").dump();
            char* table = nullptr;
            const int rc =
                mono_run_scan(a_min, a_max, steps, cfg.c_str(), &table);
            if (table) {
                std::fputs(table, stdout);
                mono_string_free(table);
            }
            return report(rc);
        }
        if (verify->parsed()) {
            const std::string cfg = merged_config(cli, "verify").dump();
            return report(mono_run_verify(dir.c_str(), cfg.c_str()));
        }
        if (exp->parsed())
            return report(mono_export_field(input.c_str(), format.c_str(),
                                            output.c_str()));
    } catch (const CLI::RuntimeError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.get_exit_code();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
