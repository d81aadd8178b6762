#pragma once

#include "config.hpp"
#include "critical_points.hpp"
#include "dynamics.hpp"
#include "eigen.hpp"
#include "newton.hpp"
#include "nonlinearity.hpp"
#include "operators.hpp"
#include "pattern.hpp"
#include "profile.hpp"
#include "surface.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

namespace tubepat {

using json = nlohmann::ordered_json;

inline std::shared_ptr<const ProfileCurve> load_spline_profile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open profile file '" + path + "'");
    std::vector<double> s, v;
    std::string line;
    while (std::getline(in, line)) {
        line = detail::trim(line);
        if (line.empty() || line[0] == '#' || line.rfind("s,", 0) == 0) continue;
        size_t comma = line.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error("profile file: expected 's,psi' lines");
        s.push_back(std::stod(line.substr(0, comma)));
        v.push_back(std::stod(line.substr(comma + 1)));
    }
    if (s.size() < 4) throw std::runtime_error("profile file: need at least 4 samples");
    double l = s.back();
    double h = l / (s.size() - 1);
    for (size_t k = 0; k < s.size(); ++k)
        if (std::abs(s[k] - k * h) > 1e-9 * std::max(1.0, l))
            throw std::runtime_error("profile file: samples must be uniform from 0 to l");
    return std::make_shared<SplineProfile>(std::move(v), l);
}

inline std::shared_ptr<const ProfileCurve> make_profile(const Config& c) {
    if (!c.spline_file.empty()) return load_spline_profile(c.spline_file);
    return std::make_shared<CosineProfile>(c.a, c.amplitude, c.l);
}

struct BasePattern {
    std::shared_ptr<const ProfileCurve> profile;
    PatternProfile pattern;
    std::optional<Nonlinearity> nl;
    DiscreteOperator op; // straight-tube operator on the config grid
    ScalarField U;
    AdmissibilityReport admissibility;
    double lambda1 = 0.0;
    double residual = 0.0;
};

// Theorem 2.1 stage: synthesize f so the pattern is an exact discrete
// equilibrium on D, then verify linearized stability.  If the configured
// member is not stable enough, scan the (beta, p) family within the config
// bounds and take the first member with lambda1 >= 0.01.
inline BasePattern build_base_pattern(const Config& c) {
    BasePattern bp;
    bp.profile = make_profile(c);
    bp.admissibility = check_admissibility(*bp.profile);
    if (!bp.admissibility.pass())
        throw std::runtime_error("build_base_pattern: profile fails admissibility "
                                 "(positivity / flat ends / stability margin)");

    double l = bp.profile->length();
    Grid2D grid = Grid2D::neumann(l, c.ns, c.ntheta);
    bp.op = assemble(*bp.profile, grid);

    auto attempt = [&](double beta, int p) {
        PatternProfile pat(l, beta, p);
        Nonlinearity nl = synthesize_f(bp.op, pat);
        ScalarField U = sample_pattern(pat, grid);
        double res = stationary_residual_norm(bp.op, nl, U);
        EigenPair ep =
            principal_eigenpair(bp.op, ScalarField(grid, nl.eval_prime(U.values)), c.eig_tol);
        return std::tuple<PatternProfile, Nonlinearity, ScalarField, double, double>(
            pat, std::move(nl), std::move(U), res, ep.lambda);
    };

    auto [pat, nl, U, res, lam] = attempt(c.beta, c.p);
    if (lam < 0.01) {
        bool found = false;
        for (int p : {c.p, c.p == 2 ? 3 : 2}) {
            for (int k = 0; k < c.beta_steps && !found; ++k) {
                double beta = c.beta_min +
                              (c.beta_steps == 1
                                   ? 0.0
                                   : k * (c.beta_max - c.beta_min) / (c.beta_steps - 1));
                auto [pat2, nl2, U2, res2, lam2] = attempt(beta, p);
                if (lam2 >= 0.01) {
                    pat = pat2;
                    nl = std::move(nl2);
                    U = std::move(U2);
                    res = res2;
                    lam = lam2;
                    found = true;
                }
            }
            if (found) break;
        }
        if (!found)
            throw std::runtime_error("build_base_pattern: no stable base pattern at this "
                                     "resolution");
    }
    bp.pattern = pat;
    bp.nl.emplace(std::move(nl));
    bp.U = std::move(U);
    bp.residual = res;
    bp.lambda1 = lam;
    return bp;
}

// Reflect the single-piece pattern across the junctions onto the glued
// grid: U(s, theta) = U_kappa(fold(s), theta), exact at the cell centers
// because the fold maps cell centers to cell centers.
inline ScalarField assemble_global_pattern(const GluedSurface& surf, const ScalarField& u_kappa,
                                           const Grid2D& global_grid) {
    const Grid2D& pg = u_kappa.grid;
    if (global_grid.ns != 2 * surf.n() * pg.ns || global_grid.ntheta != pg.ntheta ||
        global_grid.s_topology != STopology::Periodic)
        throw std::invalid_argument("assemble_global_pattern: global grid must be the "
                                    "s-periodic grid with N_s = 2n x piece N_s");
    ScalarField out(global_grid);
    for (int i = 0; i < global_grid.ns; ++i) {
        int t = i % (2 * pg.ns);
        int il = t < pg.ns ? t : 2 * pg.ns - 1 - t;
        for (int j = 0; j < global_grid.ntheta; ++j) out(i, j) = u_kappa(il, j);
    }
    return out;
}

struct PipelineResult {
    Config config;
    json report;
    bool pass = false;
    std::string failing_stage;

    // Artifacts for export / inspection.
    std::shared_ptr<const ProfileCurve> profile;
    std::optional<BasePattern> base;
    std::optional<ContinuationTrace> trace;
    int n = 0;
    double kappa = 0.0;
    std::optional<GluedSurface> surface;
    std::optional<DiscreteOperator> global_op;
    std::optional<ScalarField> u_kappa;
    std::optional<ScalarField> u_global;
    std::optional<EigenPair> global_eig;
    std::optional<StabilityReport> stability;
    std::optional<CriticalPointResult> critical;
    double decay_measured = 0.0;
};

// Full Theorem 1.1 construction with the report contract: base pattern on
// D -> continuation in kappa -> glue 2n pieces -> global pattern -> global
// eigenvalue, dynamic probe, critical point count.  Any stage failure
// produces a partial report naming the stage.
inline PipelineResult run_verification(const Config& c) {
    PipelineResult R;
    R.config = c;
    json& rep = R.report;
    {
        std::istringstream cfg_lines(serialize_config(c));
        json jc = json::object();
        std::string ln;
        while (std::getline(cfg_lines, ln)) {
            size_t eq = ln.find('=');
            std::string key = detail::trim(ln.substr(0, eq));
            std::string val = detail::trim(ln.substr(eq + 1));
            jc[key] = val;
        }
        rep["config"] = jc;
    }
    auto fail = [&](const std::string& stage, const std::string& what) {
        R.failing_stage = stage;
        rep["verdict"] = {{"pass", false}, {"failing_stage", stage}, {"error", what}};
        return R;
    };

    // Stage 1: base pattern on the straight tube.
    std::string stage = "base";
    try {
        R.base.emplace(build_base_pattern(c));
        R.profile = R.base->profile;
        rep["base"] = {{"stas_margin", R.base->admissibility.margin},
                       {"s0", R.base->admissibility.s0},
                       {"lambda1", R.base->lambda1},
                       {"residual", R.base->residual},
                       {"beta", R.base->pattern.beta},
                       {"p", R.base->pattern.p},
                       {"stiff_synthesis", R.base->nl->stiff()},
                       {"grid", {c.ns, c.ntheta}}};

        // Stage 2: continuation in curvature.
        stage = "continuation";
        ContinuationTrace tr =
            continue_in_kappa(R.profile, *R.base->nl, R.base->U, c.kappa_target, c.steps,
                              c.max_halvings, 1e-10, 0.0, c.eig_tol);
        R.trace.emplace(std::move(tr));
        if (R.trace->steps.empty())
            throw std::runtime_error("continuation failed at the first step: " +
                                     R.trace->stop_reason);
        json jsteps = json::array();
        for (const auto& st : R.trace->steps)
            jsteps.push_back({{"kappa", st.kappa},
                              {"residual", st.residual},
                              {"lambda1", st.lambda1},
                              {"sup_gap", st.sup_gap}});
        rep["continuation"] = {{"kappa0", R.trace->kappa0},
                               {"reached_target", R.trace->reached_target},
                               {"stop_reason", R.trace->stop_reason},
                               {"steps", jsteps}};

        // Stage 3: choose n and glue.
        stage = "glue";
        double l = R.profile->length();
        double kappa0 = R.trace->kappa0;
        int n = c.n;
        if (n == 0) {
            n = static_cast<int>(std::ceil(M_PI / (l * 0.8 * kappa0) - 1e-12));
            n = std::max(n, 2);
        } else if (M_PI / (n * l) >= kappa0) {
            throw std::runtime_error("glue.n too small: Theorem 1.1 requires "
                                     "n > pi/(l*kappa0), i.e. kappa = pi/(n l) < kappa0");
        }
        R.n = n;
        R.kappa = M_PI / (n * l);
        R.surface.emplace(GluedSurface(R.profile, n, kappa0));

        // Solve the pattern at exactly kappa = pi/(n l), walking the branch
        // from the continuation endpoint (or from the base if kappa0 is
        // already past it).
        ContinuationTrace tr2 = continue_in_kappa(R.profile, *R.base->nl, R.base->U, R.kappa,
                                                  c.steps, c.max_halvings, 1e-10, 0.0, c.eig_tol);
        if (!tr2.reached_target)
            throw std::runtime_error("could not continue the pattern to kappa = pi/(n l): " +
                                     tr2.stop_reason);
        R.u_kappa.emplace(tr2.field);
        double lam_kappa = tr2.lambda1;
        double piece_res = tr2.steps.back().residual;
        double sup_gap = tr2.steps.back().sup_gap;

        // Theta-variation of the continued pattern: bending breaks the
        // axial symmetry, so record how nonaxisymmetric the field became.
        double theta_var = 0.0;
        for (int i = 0; i < R.u_kappa->grid.ns; ++i) {
            double lo = (*R.u_kappa)(i, 0), hi = lo;
            for (int j = 0; j < R.u_kappa->grid.ntheta; ++j) {
                lo = std::min(lo, (*R.u_kappa)(i, j));
                hi = std::max(hi, (*R.u_kappa)(i, j));
            }
            theta_var = std::max(theta_var, hi - lo);
        }
        rep["glue"] = {{"n", n},
                       {"kappa", R.kappa},
                       {"piece_residual", piece_res},
                       {"lambda1_kappa", lam_kappa},
                       {"sup_gap", sup_gap},
                       {"theta_variation", theta_var}};

        // Stage 4: global pattern and eigenvalue on M.
        stage = "global";
        Grid2D gg = Grid2D::periodic(R.surface->period(), 2 * n * c.ns, c.ntheta);
        R.global_op.emplace(assemble(*R.surface, gg));
        R.u_global.emplace(assemble_global_pattern(*R.surface, *R.u_kappa, gg));
        double gres = stationary_residual_norm(*R.global_op, *R.base->nl, *R.u_global);
        R.global_eig.emplace(principal_eigenpair(
            *R.global_op, ScalarField(gg, R.base->nl->eval_prime(R.u_global->values)),
            c.eig_tol));
        rep["global"] = {{"residual", gres},
                         {"lambda1", R.global_eig->lambda},
                         {"eigen_residual", R.global_eig->residual},
                         {"grid", {gg.ns, gg.ntheta}}};

        // Stage 5: dynamic stability probe.
        stage = "dynamics";
        R.stability.emplace(stability_probe(*R.global_op, *R.base->nl, *R.u_global, c.delta,
                                            c.T, c.dt, c.trials, c.seed));
        json jtrials = json::array();
        for (const auto& t : R.stability->trials)
            jtrials.push_back({{"label", t.label},
                               {"max_dev", t.max_dev},
                               {"final_dev", t.final_dev}});
        // Decay rate of the last (random) trial against the linear prediction.
        const auto& rt = R.stability->trials.back();
        double rate = 0.0;
        try {
            rate = decay_rate(rt.times, rt.sup_dev, 0.1 * R.stability->delta,
                              0.9 * R.stability->delta);
        } catch (const std::exception&) {
            rate = std::numeric_limits<double>::quiet_NaN();
        }
        R.decay_measured = rate;
        rep["dynamics"] = {{"pass", R.stability->pass},
                           {"delta", R.stability->delta},
                           {"T", R.stability->T},
                           {"dt", R.stability->dt},
                           {"sandwich_ok", R.stability->sandwich_ok},
                           {"decay_rate", rate},
                           {"lambda1_kappa", lam_kappa},
                           {"trials", jtrials}};

        // Stage 6: critical points.
        stage = "critical_points";
        R.critical.emplace(count_critical_points(*R.global_op, *R.u_global, c.tol_rel));
        bool covered = covers_symmetry_points(*R.critical, gg, n, l);
        json jloc = json::array();
        for (const auto& cl : R.critical->clusters)
            jloc.push_back({{"s", cl.s}, {"theta", cl.theta}, {"size", cl.size}});
        rep["critical_points"] = {{"count", R.critical->count},
                                  {"required", 4 * n},
                                  {"covers_symmetry_points", covered},
                                  {"clusters", jloc}};

        R.pass = R.trace->reached_target || R.trace->kappa0 > R.kappa;
        R.pass = R.pass && gres <= 1e-8 && R.global_eig->lambda > 0.0 &&
                 R.stability->pass && R.critical->count >= 4 * n && covered;
        rep["verdict"] = {{"pass", R.pass}, {"failing_stage", ""}};
        if (!R.pass) rep["verdict"]["failing_stage"] = "acceptance-thresholds";
    } catch (const std::exception& e) {
        return fail(stage, e.what());
    }
    return R;
}

} // namespace tubepat
