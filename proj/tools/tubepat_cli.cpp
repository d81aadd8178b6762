#include <tubepat/tubepat.hpp>

#include "CLI11.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

namespace fs = std::filesystem;
using namespace tubepat;

namespace {

Config load_cfg(const std::string& path) {
    if (path.empty()) return Config{};
    return load_config(path);
}

struct GlueArtifacts {
    Config cfg;
    BasePattern base;
    ContinuationTrace trace;
    int n = 0;
    GluedSurface surface;
    Grid2D global_grid;
    ScalarField u_global;
};

// Shared chain for the glue/export paths: base pattern -> continuation ->
// glue -> global field.  Deterministic for a fixed config.
GlueArtifacts build_glue_artifacts(const Config& cfg) {
    BasePattern bp = build_base_pattern(cfg);
    if (bp.nl->stiff())
        std::cerr << "warning: stiff synthesis, max |f'| = " << bp.nl->max_abs_slope() << "\n";
    ContinuationTrace tr = continue_in_kappa(bp.profile, *bp.nl, bp.U, cfg.kappa_target,
                                             cfg.steps, cfg.max_halvings, 1e-10, 0.0,
                                             cfg.eig_tol);
    if (tr.steps.empty())
        throw std::runtime_error("continuation failed: " + tr.stop_reason);
    double l = bp.profile->length();
    int n = cfg.n;
    if (n == 0) n = std::max(2, static_cast<int>(std::ceil(M_PI / (l * 0.8 * tr.kappa0) - 1e-12)));
    GluedSurface surf(bp.profile, n);
    double kappa = surf.kappa();
    ContinuationTrace tr2 = tr;
    if (std::abs(tr.kappa0 - kappa) > 1e-14)
        tr2 = continue_in_kappa(bp.profile, *bp.nl, bp.U, kappa, cfg.steps, cfg.max_halvings,
                                1e-10, 0.0, cfg.eig_tol);
    if (!tr2.reached_target)
        throw std::runtime_error("could not continue to kappa = pi/(n l): " + tr2.stop_reason);
    Grid2D gg = Grid2D::periodic(surf.period(), 2 * n * cfg.ns, cfg.ntheta);
    ScalarField ug = assemble_global_pattern(surf, tr2.field, gg);
    return GlueArtifacts{cfg, std::move(bp), std::move(tr), n, std::move(surf), gg,
                         std::move(ug)};
}

void ensure_dir(const std::string& dir) {
    if (!dir.empty() && dir != ".") fs::create_directories(dir);
}

std::string join(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

int cmd_synth(const Config& cfg, const std::string& out) {
    ensure_dir(out);
    BasePattern bp = build_base_pattern(cfg);
    if (bp.nl->stiff())
        std::cerr << "warning: stiff synthesis, max |f'| = " << bp.nl->max_abs_slope() << "\n";
    {
        auto f = open_output(join(out, "nonlinearity.csv"));
        write_nonlinearity_csv(f, *bp.nl);
    }
    {
        auto f = open_output(join(out, "base_pattern.csv"));
        write_field_csv(f, bp.U);
    }
    json j = {{"stas_margin", bp.admissibility.margin},
              {"s0", bp.admissibility.s0},
              {"lambda1", bp.lambda1},
              {"residual", bp.residual},
              {"beta", bp.pattern.beta},
              {"p", bp.pattern.p},
              {"stiff_synthesis", bp.nl->stiff()}};
    auto f = open_output(join(out, "base.json"));
    f << j.dump(2) << "\n";
    std::cerr << "base pattern: lambda1 = " << bp.lambda1 << ", residual = " << bp.residual
              << "\n";
    return 0;
}

int cmd_continue(const Config& cfg, const std::string& out) {
    ensure_dir(out);
    BasePattern bp = build_base_pattern(cfg);
    ContinuationTrace tr = continue_in_kappa(bp.profile, *bp.nl, bp.U, cfg.kappa_target,
                                             cfg.steps, cfg.max_halvings, 1e-10, 0.0,
                                             cfg.eig_tol);
    auto f = open_output(join(out, "continuation.csv"));
    write_continuation_csv(f, tr);
    std::cerr << "continuation: kappa0 = " << tr.kappa0
              << (tr.reached_target ? " (target reached)" : " (" + tr.stop_reason + ")") << "\n";
    return 0;
}

int cmd_glue(const Config& cfg, const std::string& out) {
    ensure_dir(out);
    GlueArtifacts ga = build_glue_artifacts(cfg);
    {
        auto f = open_output(join(out, "surface.obj"));
        write_obj(f, ga.surface, ga.global_grid);
    }
    {
        auto f = open_output(join(out, "global_field.csv"));
        write_field_csv(f, ga.u_global);
    }
    std::cerr << "glued surface: n = " << ga.n << ", kappa = " << ga.surface.kappa() << "\n";
    return 0;
}

int cmd_verify(const Config& cfg, const std::string& out) {
    ensure_dir(out);
    PipelineResult r = run_verification(cfg);
    {
        auto f = open_output(join(out, "report.json"));
        f << r.report.dump(2) << "\n";
    }
    if (r.trace) {
        auto f = open_output(join(out, "continuation.csv"));
        write_continuation_csv(f, *r.trace);
    }
    if (r.base && r.base->nl) {
        auto f = open_output(join(out, "nonlinearity.csv"));
        write_nonlinearity_csv(f, *r.base->nl);
    }
    if (r.surface && r.global_op) {
        auto f = open_output(join(out, "surface.obj"));
        write_obj(f, *r.surface, r.global_op->grid);
    }
    if (r.u_global) {
        auto f = open_output(join(out, "global_field.csv"));
        write_field_csv(f, *r.u_global);
    }
    if (r.stability) {
        for (const auto& t : r.stability->trials) {
            auto f = open_output(join(out, "trajectory_" + t.label + ".csv"));
            write_trajectory_csv(f, t.times, t.sup_dev);
        }
    }
    if (!r.failing_stage.empty()) {
        std::cerr << "verification aborted in stage '" << r.failing_stage << "'\n";
        return 1;
    }
    std::cerr << "verification " << (r.pass ? "PASS" : "FAIL") << "\n";
    return r.pass ? 0 : 1;
}

int cmd_export(const Config& cfg, const std::string& out, const std::string& format) {
    ensure_dir(out);
    if (format == "obj") {
        GlueArtifacts ga = build_glue_artifacts(cfg);
        auto f = open_output(join(out, "surface.obj"));
        write_obj(f, ga.surface, ga.global_grid);
    } else if (format == "csv") {
        GlueArtifacts ga = build_glue_artifacts(cfg);
        auto f = open_output(join(out, "global_field.csv"));
        write_field_csv(f, ga.u_global);
    } else if (format == "json") {
        // Re-emit an existing report (parse -> serialize round trip).
        std::ifstream in(join(out, "report.json"));
        if (!in) throw std::runtime_error("export json: no report.json in output directory; "
                                          "run verify first");
        json j = json::parse(in);
        auto f = open_output(join(out, "report.json"));
        f << j.dump(2) << "\n";
    } else {
        throw std::runtime_error("unknown export format '" + format + "'");
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stable patterns of reaction-diffusion equations on tubes and glued "
                 "genus-1 surfaces"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".", format = "obj";
    app.add_option("--config", config_path, "configuration file (section.key = value)");
    app.add_option("--out", out_dir, "output directory");

    auto* synth = app.add_subcommand("synth", "synthesize the base pattern and nonlinearity");
    auto* cont = app.add_subcommand("continue", "continue the pattern in curvature");
    auto* glue = app.add_subcommand("glue", "build the glued surface mesh and global field");
    auto* verify = app.add_subcommand("verify", "run the full verification pipeline");
    auto* expo = app.add_subcommand("export", "re-emit artifacts in a given format");
    expo->add_option("--format", format, "obj | csv | json");
    // Accept the global --config/--out after the subcommand as well.
    for (auto* sub : {synth, cont, glue, verify, expo}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 2;
    }

    try {
        Config cfg = load_cfg(config_path);
        if (synth->parsed()) return cmd_synth(cfg, out_dir);
        if (cont->parsed()) return cmd_continue(cfg, out_dir);
        if (glue->parsed()) return cmd_glue(cfg, out_dir);
        if (verify->parsed()) return cmd_verify(cfg, out_dir);
        if (expo->parsed()) return cmd_export(cfg, out_dir, format);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
