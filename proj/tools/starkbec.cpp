#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "starkbec/analysis.hpp"
#include "starkbec/config.hpp"
#include "starkbec/gpe.hpp"
#include "starkbec/io.hpp"
#include "starkbec/lattice.hpp"
#include "starkbec/units.hpp"
#include "starkbec/ws_basis.hpp"

namespace fs = std::filesystem;
using namespace starkbec;
using nlohmann::json;

namespace {

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidParameter:
        case ErrorCode::BoxTooSmall:
        case ErrorCode::IncompatibleGrid:
        case ErrorCode::InvalidLaunch:
        case ErrorCode::Io:
            return 1;  // usage / configuration
        default:
            return 2;  // numerical failure
    }
}

json config_to_json(const Config& cfg) {
    json j = json::object();
    for (const auto& name : cfg.section_names()) {
        // round-trip through parse keeps this faithful to the file
        j[name] = json::object();
    }
    // serialize entries via Config text to keep ordering stable
    Config copy = cfg;
    std::istringstream in(copy.serialize());
    std::string line, section;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line.front() == '[') {
            section = line.substr(1, line.size() - 2);
            continue;
        }
        const auto eq = line.find(" = ");
        j[section][line.substr(0, eq)] = line.substr(eq + 3);
    }
    return j;
}

struct Context {
    RunConfig rc;
    Config resolved;
    std::vector<std::string> overrides;
    std::string command;

    fs::path out_dir() const { return fs::path(rc.output_dir); }

    void write_manifest(const std::vector<std::string>& outputs,
                        const json& extra) const {
        json m;
        m["command"] = command;
        m["config"] = config_to_json(resolved);
        m["overrides"] = overrides;
        m["outputs"] = outputs;
        m["details"] = extra;
        write_text_file((out_dir() / (command + "_manifest.json")).string(),
                        m.dump(1) + "\n");
    }
};

Context make_context(const std::string& config_path,
                     const std::vector<std::string>& overrides,
                     const std::string& command) {
    Config cfg = config_path.empty() ? Config::parse("")
                                     : Config::load(config_path);
    cfg.apply_overrides(overrides);
    Context ctx;
    ctx.rc = RunConfig::from_config(cfg);
    ctx.resolved = ctx.rc.to_config();  // all defaults resolved
    ctx.overrides = overrides;
    ctx.command = command;
    fs::create_directories(ctx.rc.output_dir);
    for (const auto& w : ctx.rc.preparation.warnings)
        std::cerr << "warning: " << w << "\n";
    return ctx;
}

std::pair<WsBasis, ChiTensor> ensure_basis(const Context& ctx, bool force_build) {
    const fs::path path = ctx.out_dir() / "basis.json";
    if (!force_build && fs::exists(path)) {
        try {
            auto loaded = load_basis_json(path.string());
            const auto& p = loaded.first.params();
            if (basis_content_hash(p, loaded.first.box()) ==
                basis_content_hash(ctx.rc.params, ctx.rc.box))
                return loaded;
        } catch (const Error&) {
            // stale or foreign file; rebuild below
        }
    }
    WsBasis basis = solve_ws_states(ctx.rc.params, ctx.rc.box);
    ChiTensor chi = chi_tensor(basis, ctx.rc.chi_cutoff);
    save_basis_json(path.string(), basis, chi);
    return {std::move(basis), std::move(chi)};
}

json chi_json(const ChiTensor& chi) {
    return {{"chi000", chi.chi000()},
            {"chi001", chi.chi001()},
            {"chi00m1", chi.chi00m1()},
            {"cutoff_radius", chi.cutoff_radius()}};
}

json rescaled_json(const RescaledParams& rp) {
    return {{"force_rescaled", rp.force_rescaled}, {"sigma_g", rp.sigma_g},
            {"beta", rp.beta},                     {"epsilon", rp.epsilon},
            {"time_scale", rp.time_scale},         {"epsilon_large", rp.epsilon_large}};
}

int cmd_basis(const Context& ctx) {
    auto [basis, chi] = ensure_basis(ctx, true);

    std::ostringstream report;
    report << "# Wannier-Stark basis report\n";
    report << "wells = " << ctx.rc.box.well_count
           << ", points_per_period = " << ctx.rc.box.points_per_period
           << ", edge_margin = " << ctx.rc.box.edge_margin << "\n";
    report << "kept wells: [" << basis.min_well() << ", " << basis.max_well()
           << "]\n";
    report << "content_hash = " << basis_content_hash(ctx.rc.params, ctx.rc.box)
           << "\n\n";
    report << "chi000 = " << format_full(chi.chi000()) << "\n";
    report << "chi001 = " << format_full(chi.chi001()) << "\n";
    report << "chi00m1 = " << format_full(chi.chi00m1()) << "\n\n";
    const int n_half = std::min(5, basis.box().well_count / 4);
    report << "ladder max |dE - F|/F over |n| <= " << n_half << ": "
           << format_full(basis.ladder_max_rel_dev(n_half)) << "\n";
    report << "translation max |phi_1(x) - phi_0(x-1)|: "
           << format_full(basis.translation_max_dev(1, 0)) << "\n\n";
    report << "# chi entries (canonical triples, |index| <= "
           << chi.cutoff_radius() << ")\n";
    for (const auto& [t, v] : chi.entries())
        report << t[0] << " " << t[1] << " " << t[2] << " " << format_full(v)
               << "\n";
    write_text_file((ctx.out_dir() / "chi_report.txt").string(), report.str());

    json extra;
    extra["chi"] = chi_json(chi);
    if (ctx.rc.params.g != 0.0)
        extra["rescaled"] = rescaled_json(rescale(ctx.rc.params, chi));
    extra["basis_hash"] = basis_content_hash(ctx.rc.params, ctx.rc.box);
    ctx.write_manifest({"basis.json", "chi_report.txt"}, extra);
    std::cout << "chi000 = " << format_full(chi.chi000()) << "\n"
              << "chi001 = " << format_full(chi.chi001()) << "\n"
              << "chi00m1 = " << format_full(chi.chi00m1()) << "\n";
    return 0;
}

std::vector<double> sample_grid(double t_end, int samples) {
    std::vector<double> ts;
    if (samples < 1 || t_end <= 0.0) {
        ts.push_back(0.0);
        return ts;
    }
    for (int i = 0; i < samples; ++i)
        ts.push_back(t_end * i / static_cast<double>(samples - 1));
    return ts;
}

struct GpeRun {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> actions;  // per track well
    std::vector<double> completeness;
    GpeDiagnostics diag;
};

GpeRun run_gpe(const Context& ctx, const WsBasis& basis,
               const std::vector<double>& ts) {
    GpeRun run;
    Field f = field_from_modes(ctx.rc.preparation.to_modes(), basis);
    GpeEvolver evolver(f.grid, ctx.rc.params);
    {
        // honor the doubled-step pre-check on the initial state
        double err = evolver.split_step_error(f, ctx.rc.dt);
        if (err > GpeOptions{}.split_err_tol)
            throw Error(ErrorCode::StepSize,
                        "GPE splitting error " + format_full(err) +
                            " at dt = " + format_full(ctx.rc.dt) +
                            "; decrease [run] dt");
    }
    for (double t : ts) {
        if (t > f.time) {
            const long steps = std::lround((t - f.time) / ctx.rc.dt);
            if (steps > 0) evolver.advance(f, ctx.rc.dt, steps);
            f.time = t;  // absorb the sub-step rounding in the label
        }
        ModeState m = project_to_ws(f, basis);
        Eigen::VectorXd acts(ctx.rc.track_wells.size());
        for (std::size_t i = 0; i < ctx.rc.track_wells.size(); ++i)
            acts[static_cast<Eigen::Index>(i)] =
                std::norm(m.at_well(ctx.rc.track_wells[i]));
        run.times.push_back(t);
        run.actions.push_back(std::move(acts));
        run.completeness.push_back(m.norm2());
    }
    run.diag = evolver.diagnostics();
    run.diag.dt_used = ctx.rc.dt;
    return run;
}

int cmd_evolve(const Context& ctx, const std::string& solver_override) {
    auto [basis, chi] = ensure_basis(ctx, false);
    const std::string solver =
        solver_override.empty() ? ctx.rc.solver : solver_override;

    const auto ts = sample_grid(ctx.rc.t_end, ctx.rc.samples);
    std::vector<std::string> outputs;
    json extra;
    extra["chi"] = chi_json(chi);

    const ModeState prep = ctx.rc.preparation.to_modes();
    const int well_lo = prep.first_well - ctx.rc.well_margin;
    const int well_hi = prep.last_well() + ctx.rc.well_margin;

    Trajectory model;
    if (solver == "model" || solver == "both") {
        LatticeSystem sys =
            LatticeSystem::from_chi(ctx.rc.params, chi, well_lo, well_hi);
        model = integrate(prep, sys, ts, ctx.rc.tol);

        std::vector<std::string> header{"t"};
        for (int w = well_lo; w <= well_hi; ++w)
            header.push_back("I_" + std::to_string(w));
        for (int w = well_lo; w <= well_hi; ++w)
            header.push_back("theta_" + std::to_string(w));
        CsvWriter csv((ctx.out_dir() / "model_trajectory.csv").string(), header);
        for (std::size_t s = 0; s < model.times.size(); ++s) {
            std::vector<double> row{model.times[s]};
            for (int i = 0; i < model.states[s].size(); ++i)
                row.push_back(std::norm(model.states[s][i]));
            for (int i = 0; i < model.states[s].size(); ++i) {
                const auto c = model.states[s][i];
                row.push_back(c == std::complex<double>(0.0) ? 0.0
                                                             : wrap_angle(std::arg(c)));
            }
            csv.row(row);
        }
        outputs.push_back("model_trajectory.csv");
        extra["model"] = {{"norm_drift", model.norm_drift},
                          {"energy_drift_rel", model.energy_drift_rel},
                          {"edge_population", model.edge_population},
                          {"steps", model.ode.steps},
                          {"well_range", {well_lo, well_hi}},
                          {"tol", ctx.rc.tol}};
        if (model.edge_population > 1e-3)
            std::cerr << "warning: outermost retained wells reached population "
                      << format_full(model.edge_population) << "\n";
    }

    GpeRun gpe;
    if (solver == "gpe" || solver == "both") {
        gpe = run_gpe(ctx, basis, ts);
        std::vector<std::string> header{"t"};
        for (int w : ctx.rc.track_wells) header.push_back("I_" + std::to_string(w));
        header.push_back("completeness");
        CsvWriter csv((ctx.out_dir() / "gpe_trajectory.csv").string(), header);
        for (std::size_t s = 0; s < gpe.times.size(); ++s) {
            std::vector<double> row{gpe.times[s]};
            for (int i = 0; i < gpe.actions[s].size(); ++i)
                row.push_back(gpe.actions[s][i]);
            row.push_back(gpe.completeness[s]);
            csv.row(row);
        }
        outputs.push_back("gpe_trajectory.csv");
        extra["gpe"] = {{"dt", gpe.diag.dt_used},
                        {"steps", gpe.diag.steps},
                        {"norm_drift", gpe.diag.norm_drift},
                        {"max_leak", gpe.diag.max_leak},
                        {"warnings", gpe.diag.warnings}};
    }

    if (solver == "both") {
        CsvWriter csv((ctx.out_dir() / "comparison.csv").string(),
                      {"well", "rms_diff", "max_diff"});
        json comp = json::array();
        for (std::size_t i = 0; i < ctx.rc.track_wells.size(); ++i) {
            const int w = ctx.rc.track_wells[i];
            if (w < well_lo || w > well_hi) continue;
            double rms = 0.0, worst = 0.0;
            for (std::size_t s = 0; s < ts.size(); ++s) {
                const double im = std::norm(model.states[s][w - model.first_well]);
                const double ig = gpe.actions[s][static_cast<Eigen::Index>(i)];
                rms += (ig - im) * (ig - im);
                worst = std::max(worst, std::abs(ig - im));
            }
            rms = std::sqrt(rms / static_cast<double>(ts.size()));
            csv.row({static_cast<double>(w), rms, worst});
            comp.push_back({{"well", w}, {"rms", rms}, {"max", worst}});
            std::cout << "well " << w << ": rms " << format_full(rms) << " max "
                      << format_full(worst) << "\n";
        }
        outputs.push_back("comparison.csv");
        extra["comparison"] = comp;
    }

    ctx.write_manifest(outputs, extra);
    return 0;
}

int cmd_section(const Context& ctx) {
    const ChiTensor chi = ensure_basis(ctx, false).second;
    LatticeSystem sys = LatticeSystem::from_chi(
        ctx.rc.params, chi, ctx.rc.section_well_min, ctx.rc.section_well_max);
    PoincareSection sec =
        poincare_section(ctx.rc.section, ctx.rc.section_launches, sys,
                         ctx.rc.section.max_crossings, ctx.rc.threads);

    std::vector<std::string> outputs;
    CsvWriter csv((ctx.out_dir() / "section.csv").string(),
                  {"launch_I0", "crossing_index", "I0", "dtheta"});
    json orbits = json::array();
    for (std::size_t o = 0; o < sec.orbits.size(); ++o) {
        const auto& orbit = sec.orbits[o];
        char name[32];
        std::snprintf(name, sizeof(name), "orbit_%03zu.csv", o);
        CsvWriter ocsv((ctx.out_dir() / name).string(), {"I0", "dtheta"});
        for (int j = 0; j < orbit.crossings(); ++j) {
            csv.row({orbit.launch_action, static_cast<double>(j),
                     orbit.actions[j], orbit.angles_wrapped[j]});
            ocsv.row({orbit.actions[j], orbit.angles_wrapped[j]});
        }
        outputs.push_back(name);
        orbits.push_back({{"launch", orbit.launch_action},
                          {"crossings", orbit.crossings()},
                          {"rotation_number", orbit.crossings() >= 3
                                                  ? json(orbit.rotation_number())
                                                  : json()},
                          {"action_spread", orbit.action_spread()},
                          {"terminated_early", orbit.terminated_early},
                          {"empty", orbit.empty}});
    }
    outputs.insert(outputs.begin(), "section.csv");

    json extra;
    extra["chi"] = chi_json(chi);
    extra["rescaled"] = rescaled_json(sec.params);
    extra["orbits"] = orbits;
    ctx.write_manifest(outputs, extra);
    std::cout << "section: " << sec.orbits.size() << " orbits written\n";
    return 0;
}

int cmd_lyapunov(const Context& ctx) {
    const ChiTensor chi = ensure_basis(ctx, false).second;
    LatticeSystem sys = LatticeSystem::from_chi(
        ctx.rc.params, chi, ctx.rc.section_well_min, ctx.rc.section_well_max);

    CsvWriter csv((ctx.out_dir() / "lyapunov.csv").string(),
                  {"launch_I0", "lambda", "converged"});
    json rows = json::array();
    for (double launch : ctx.rc.lyap_launches) {
        ActionAngleState aa = make_launch(ctx.rc.section, launch, sys.well_min,
                                          sys.well_max);
        LyapunovResult res =
            lyapunov_max(from_action_angle(aa), sys, ctx.rc.lyap_horizon,
                         ctx.rc.lyap);
        csv.row({launch, res.lambda, res.converged ? 1.0 : 0.0});
        rows.push_back({{"launch", launch},
                        {"lambda", res.lambda},
                        {"converged", res.converged}});
        std::cout << "I0 = " << format_full(launch) << ": lambda = "
                  << format_full(res.lambda)
                  << (res.converged ? "" : " (inconclusive)") << "\n";
    }
    json extra;
    extra["rescaled"] = rescaled_json(sys.rescaled_params());
    extra["horizon"] = ctx.rc.lyap_horizon;
    extra["results"] = rows;
    ctx.write_manifest({"lyapunov.csv"}, extra);
    return 0;
}

int cmd_resonances(const Context& ctx) {
    const ChiTensor chi = ensure_basis(ctx, false).second;
    const RescaledParams rp = rescale(ctx.rc.params, chi);
    const double budget =
        ctx.rc.section.total_norm - ctx.rc.section.fixed_action;

    CsvWriter csv((ctx.out_dir() / "resonances.csv").string(),
                  {"a", "b", "exists", "I0", "I1"});
    json rows = json::array();
    for (auto [a, b] : ctx.rc.resonance_orders) {
        const ResonanceLocus loc = resonance_locus(a, b, rp, budget);
        csv.row({static_cast<double>(a), static_cast<double>(b),
                 loc.exists ? 1.0 : 0.0, loc.action, loc.partner});
        rows.push_back({{"a", a},
                        {"b", b},
                        {"exists", loc.exists},
                        {"I0", loc.action},
                        {"I1", loc.partner}});
        std::cout << a << ":" << b << " -> "
                  << (loc.exists ? "I0 = " + format_full(loc.action)
                                 : std::string("no locus in the physical range"))
                  << "\n";
    }
    json extra;
    extra["chi"] = chi_json(chi);
    extra["rescaled"] = rescaled_json(rp);
    extra["budget"] = budget;
    ctx.write_manifest({"resonances.csv"}, extra);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Wannier-Stark BEC dynamics: basis construction, GPE and "
                 "discrete-model evolution, and phase-space cartography"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    app.add_option("-c,--config", config_path, "run configuration file");
    app.add_option("-s,--set", overrides,
                   "override a config entry (section.key=value)");

    auto* basis = app.add_subcommand("basis", "build the WS basis and chi tensor");
    auto* evolve = app.add_subcommand("evolve", "run the GPE and/or the discrete model");
    std::string solver;
    evolve->add_option("--solver", solver, "gpe, model or both (overrides config)");
    auto* compare =
        app.add_subcommand("compare", "run both solvers and report per-well RMS");
    auto* section = app.add_subcommand("section", "compute a Poincare section");
    auto* lyapunov = app.add_subcommand("lyapunov", "largest Lyapunov exponents");
    auto* resonances =
        app.add_subcommand("resonances", "predicted resonance loci table");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;  // 1 for any usage error
    }

    try {
        if (basis->parsed())
            return cmd_basis(make_context(config_path, overrides, "basis"));
        if (evolve->parsed())
            return cmd_evolve(make_context(config_path, overrides, "evolve"), solver);
        if (compare->parsed())
            return cmd_evolve(make_context(config_path, overrides, "compare"), "both");
        if (section->parsed())
            return cmd_section(make_context(config_path, overrides, "section"));
        if (lyapunov->parsed())
            return cmd_lyapunov(make_context(config_path, overrides, "lyapunov"));
        if (resonances->parsed())
            return cmd_resonances(make_context(config_path, overrides, "resonances"));
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
