#include "pdp/io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

using namespace pdp;
using io::json;

namespace {

struct Args {
    std::string config;
    std::string out;
    std::string potential;
    std::string vary = "a";
    std::vector<double> values;
    int jobs = 1;
};

json args_json(const Args& a) {
    return {{"potential", a.potential.empty() ? std::string() : std::filesystem::absolute(a.potential).string()}, {"vary", a.vary}, {"values", a.values}, {"jobs", a.jobs}};
}

std::vector<double> column(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> k(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) k[static_cast<std::size_t>(i)] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
    return k;
}

PotentialField load_potential(const io::RunConfig& cfg, const Args& args) {
    if (args.potential.empty()) return io::initial_potential(cfg);
    return io::read_potential_csv(args.potential, cfg.design.a);
}

void write_potential(io::Manifest& m, const std::string& name, const PotentialField& V) {
    io::write_csv(m.file(name), {"x", "V"}, {column(V.grid.nodes()), column(V.values)});
}

void write_spectral(io::Manifest& m, const io::RunConfig& cfg, const PotentialField& V, const FgrResult& f) {
    const Grid& g = V.grid;
    io::write_csv(m.file("psi.csv"), {"x", "psi"}, {column(g.nodes()), column(f.bound_state.psi)});
    const ScatteringState& s = f.scattering;
    io::write_csv(m.file("wave.csv"), {"x", "re_e_plus", "im_e_plus", "abs_e_plus"},
                  {column(g.nodes()), column(s.e_plus.real()), column(s.e_plus.imag()), column(s.e_plus.cwiseAbs())});
    const std::vector<double> ks = linspace(cfg.k_min, cfg.k_max, cfg.k_count);
    const auto sweep = transmission_sweep(V, ks);
    std::vector<double> t2, re, im;
    for (const auto& x : sweep) {
        t2.push_back(x.transmission_sq());
        re.push_back(x.t.real());
        im.push_back(x.t.imag());
    }
    io::write_csv(m.file("transmission.csv"), {"k", "t_sq", "re_t", "im_t"}, {ks, t2, re, im});
}

json diagnostics(const PotentialField& V, const DesignParams& d, const FgrResult& f) {
    const WronskianResult w = wronskian_at_zero(V, d.wronskian_tol);
    const double h1 = h1_norm_sq(V);
    return {{"gamma", f.gamma},
            {"k_res", f.k_res},
            {"lambda", f.lambda()},
            {"bound_states", f.bound_state.count_negative},
            {"transmission_sq", f.transmission_sq()},
            {"m_plus_sq", std::norm(f.m_plus)},
            {"m_minus_sq", std::norm(f.m_minus)},
            {"unitarity_defect", f.scattering.unitarity_defect()},
            {"wronskian", w.w0},
            {"wronskian_variance", w.variance},
            {"wronskian_valid", w.valid},
            {"margins",
             {{"resonance", f.lambda() + d.mu}, {"wronskian", w.w0 * w.w0 - d.delta}, {"h1", d.b * d.b - h1}}},
            {"mechanism", classify_mechanism(f.transmission_sq())}};
}

int cmd_evaluate(const io::RunConfig& cfg, const Args& args) {
    const PotentialField V = load_potential(cfg, args);
    const DesignParams d = io::design_on(cfg, V.grid);
    const FgrResult f = golden_rule_rate(V, d);
    const json diag = diagnostics(V, d, f);
    std::cout << diag.dump(2) << '\n';
    if (args.out.empty()) return 0;
    io::Manifest m("evaluate", io::to_json(cfg), args.out);
    m.set("arguments", args_json(args));
    m.headline() = diag;
    write_potential(m, "V.csv", V);
    write_spectral(m, cfg, V, f);
    m.write();
    return 0;
}

void write_trace(io::Manifest& m, const OptTrace& trace) {
    std::vector<std::vector<double>> c(10);
    for (const TraceRow& r : trace.rows) {
        const double row[] = {static_cast<double>(r.iter), r.tau, r.gamma, r.barrier_value, r.grad_norm,
                              r.step_length, r.margins.resonance, r.margins.wronskian, r.margins.h1,
                              r.wronskian_variance};
        for (std::size_t i = 0; i < c.size(); ++i) c[i].push_back(row[i]);
    }
    io::write_csv(m.file("trace.csv"),
                  {"iter", "tau", "gamma", "barrier_value", "grad_norm", "step_length", "margin_resonance",
                   "margin_wronskian", "margin_h1", "wronskian_variance"},
                  c);
}

json run_headline(const OptResult& r) {
    const BarrierEvaluation& e = r.final_eval;
    return {{"gamma_init", r.gamma_init},
            {"gamma_opt", r.gamma_opt},
            {"lambda", e.lambda},
            {"k_res", std::sqrt(e.margins.resonance)},
            {"transmission_sq", e.transmission_sq},
            {"wronskian", e.wronskian},
            {"margins", {{"resonance", e.margins.resonance}, {"wronskian", e.margins.wronskian}, {"h1", e.margins.h1}}},
            {"iterations", r.iterations},
            {"stop", to_string(r.stop)},
            {"mechanism", classify_mechanism(e.transmission_sq)}};
}

void write_run(io::Manifest& m, const io::RunConfig& cfg, const PotentialField& v_init, const OptResult& r,
               const DesignParams& d) {
    write_potential(m, "V_init.csv", v_init);
    write_potential(m, "V_opt.csv", r.v_opt);
    write_trace(m, r.trace);
    write_spectral(m, cfg, r.v_opt, golden_rule_rate(r.v_opt, d));
    m.headline() = run_headline(r);
}

int cmd_optimize(const io::RunConfig& cfg, const Args& args) {
    if (args.out.empty()) throw ConfigError("optimize needs --out");
    const PotentialField v_init = load_potential(cfg, args);
    const DesignParams d = io::design_on(cfg, v_init.grid);
    const OptResult r = optimize(v_init, d, cfg.optimizer);
    io::Manifest m("optimize", io::to_json(cfg), args.out);
    m.set("arguments", args_json(args));
    write_run(m, cfg, v_init, r, d);
    m.write();
    std::cout << m.headline().dump(2) << '\n';
    return 0;
}

int cmd_sweep(const io::RunConfig& cfg, const Args& args) {
    if (args.out.empty()) throw ConfigError("sweep needs --out");
    if (args.vary != "a" && args.vary != "mu") throw ConfigError("--vary must be 'a' or 'mu'");
    const double pad = cfg.grid.x_max - cfg.design.a;
    std::vector<SweepEntry> entries;
    std::vector<io::RunConfig> configs;
    for (double value : args.values) {
        io::RunConfig c = cfg;
        if (args.vary == "a") {
            c.design.a = value;
            const double half = value + pad;
            const Index n = static_cast<Index>(std::llround(2.0 * half / cfg.grid.h)) + 1;
            c.grid = make_grid(-half, half, n);
        } else {
            c.design.mu = value;
        }
        c.design = io::design_on(c, c.grid);
        configs.push_back(c);
        char label[64];
        std::snprintf(label, sizeof label, "%s_%g", args.vary.c_str(), value);
        entries.push_back({label, io::initial_potential(c), c.design, c.optimizer});
    }
    const std::vector<DesignRun> runs = sweep(entries, args.jobs);

    io::Manifest top("sweep", io::to_json(cfg), args.out);
    top.set("arguments", args_json(args));
    json summary = json::array();
    std::FILE* f = std::fopen(top.file("summary.csv").c_str(), "w");
    if (!f) throw Error("cannot write summary.csv");
    std::fprintf(f, "label,%s,ok,gamma_init,gamma_opt,lambda,transmission_sq,mechanism,iterations,stop,error\n",
                 args.vary.c_str());
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const DesignRun& run = runs[i];
        if (run.ok) {
            const OptResult& r = *run.result;
            io::Manifest m("optimize", io::to_json(configs[i]), std::filesystem::path(args.out) / run.label);
            write_run(m, configs[i], entries[i].v_init, r, entries[i].params);
            m.write();
            for (const auto& name : {"V_init.csv", "V_opt.csv", "trace.csv", "psi.csv", "wave.csv",
                                     "transmission.csv", "manifest.json"})
                top.file(run.label + "/" + name);
            std::fprintf(f, "%s,%.17g,1,%.17g,%.17g,%.17g,%.17g,%s,%d,%s,\n", run.label.c_str(), args.values[i],
                         r.gamma_init, r.gamma_opt, r.final_eval.lambda, r.final_eval.transmission_sq,
                         classify_mechanism(r.final_eval.transmission_sq).c_str(), r.iterations,
                         to_string(r.stop).c_str());
            summary.push_back({{"label", run.label}, {"ok", true}, {"headline", run_headline(r)}});
        } else {
            std::string err = run.error;
            for (char& ch : err)
                if (ch == ',' || ch == '\n') ch = ';';
            std::fprintf(f, "%s,%.17g,0,,,,,,,,%s\n", run.label.c_str(), args.values[i], err.c_str());
            summary.push_back({{"label", run.label}, {"ok", false}, {"error", run.error}});
        }
    }
    std::fclose(f);
    top.headline() = summary;
    top.write();
    std::cout << summary.dump(2) << '\n';
    return 0;
}

struct SimSetup {
    PotentialField V;
    VectorXd beta;
    double gamma = 0.0;
};

SimSetup sim_setup(const io::RunConfig& cfg, const Args& args) {
    const PotentialField source = load_potential(cfg, args);
    const PotentialField V = resample(source, cfg.sim.domain);
    DesignParams d = io::design_on(cfg, V.grid);
    d.mu = cfg.sim.mu;
    const FgrResult f = golden_rule_rate(V, d);
    SimSetup s{V, d.beta_values(V), f.gamma};
    double reach = V.support_halfwidth;
    if (d.beta_mode == BetaMode::Fixed) reach = std::max(reach, cfg.beta_halfwidth);
    cfg.sim.validate(reach, std::max(std::abs(f.lambda()), f.k_res * f.k_res));
    return s;
}

int write_sim(const io::RunConfig& cfg, const Args& args, const std::string& command, const SimSetup& s,
              const SimResult& r) {
    const double t1 = cfg.fit_end < 0.0 ? cfg.sim.t_final : cfg.fit_end;
    json head = {{"gamma", s.gamma},
                 {"epsilon", cfg.sim.epsilon},
                 {"predicted_rate", 2.0 * cfg.sim.epsilon * cfg.sim.epsilon * s.gamma},
                 {"initial_projection_sq", r.projection_sq.front()},
                 {"final_projection_sq", r.projection_sq.back()},
                 {"retained_fraction", r.projection_sq.back() / r.projection_sq.front()}};
    try {
        head["fitted_rate"] = fit_decay_rate(r, cfg.fit_begin, t1);
    } catch (const std::exception&) {
        head["fitted_rate"] = nullptr;
    }
    if (command == "filter") {
        head["seed"] = cfg.seed;
        head["noise_amplitude"] = cfg.noise_amplitude;
    }
    std::cout << head.dump(2) << '\n';
    if (args.out.empty()) return 0;
    io::Manifest m(command, io::to_json(cfg), args.out);
    m.set("arguments", args_json(args));
    m.headline() = head;
    io::write_csv(m.file("projection.csv"), {"t", "projection_sq", "norm"}, {r.times, r.projection_sq, r.norm});
    m.write();
    return 0;
}

int cmd_simulate(const io::RunConfig& cfg, const Args& args) {
    const SimSetup s = sim_setup(cfg, args);
    return write_sim(cfg, args, "simulate", s, propagate_bound_state(s.V, s.beta, cfg.sim));
}

int cmd_filter(const io::RunConfig& cfg, const Args& args) {
    const SimSetup s = sim_setup(cfg, args);
    return write_sim(cfg, args, "filter", s, filter_experiment(s.V, s.beta, cfg.sim, cfg.noise_amplitude, cfg.seed));
}

int cmd_gradcheck(const io::RunConfig& cfg, const Args& args) {
    const PotentialField V = load_potential(cfg, args);
    const DesignParams d = io::design_on(cfg, V.grid);
    GradCheckOptions o;
    o.directions = cfg.grad_directions;
    o.epsilon = cfg.grad_epsilon;
    o.seed = cfg.grad_seed;
    o.form = cfg.optimizer.form;
    o.tau = cfg.optimizer.tau_schedule.front();
    const auto entries = gradient_check(V, d, o);
    bool pass = true;
    std::vector<std::vector<double>> c(4);
    std::vector<std::string> names;
    for (const auto& e : entries) {
        const bool ok = e.rel_error < cfg.grad_tolerance;
        pass = pass && ok;
        std::printf("%-10s dir=%2d analytic=% .10e fd=% .10e rel=%.2e %s\n", e.functional.c_str(), e.direction,
                    e.analytic, e.finite_difference, e.rel_error, ok ? "ok" : "FAIL");
    }
    std::printf("%s\n", pass ? "PASS" : "FAIL");
    if (!args.out.empty()) {
        io::Manifest m("gradcheck", io::to_json(cfg), args.out);
        m.set("arguments", args_json(args));
        std::FILE* f = std::fopen(m.file("gradcheck.csv").c_str(), "w");
        if (!f) throw Error("cannot write gradcheck.csv");
        std::fprintf(f, "functional,direction,analytic,finite_difference,rel_error\n");
        for (const auto& e : entries)
            std::fprintf(f, "%s,%d,%.17g,%.17g,%.17g\n", e.functional.c_str(), e.direction, e.analytic,
                         e.finite_difference, e.rel_error);
        std::fclose(f);
        m.headline() = {{"pass", pass}, {"tolerance", cfg.grad_tolerance}};
        m.write();
    }
    return pass ? 0 : 1;
}

int dispatch(const std::string& command, const io::RunConfig& cfg, const Args& args) {
    if (command == "evaluate") return cmd_evaluate(cfg, args);
    if (command == "optimize") return cmd_optimize(cfg, args);
    if (command == "sweep") return cmd_sweep(cfg, args);
    if (command == "simulate") return cmd_simulate(cfg, args);
    if (command == "filter") return cmd_filter(cfg, args);
    if (command == "gradcheck") return cmd_gradcheck(cfg, args);
    throw ConfigError("unknown command '" + command + "'");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Potential design for long-lived metastable states"};
    app.require_subcommand(1);
    Args args;
    std::optional<double> a, mu, epsilon, t_final, noise;
    std::optional<std::uint64_t> seed;
    bool symmetric = false;
    std::string manifest;

    auto common = [&](CLI::App* sub, bool needs_out) {
        sub->add_option("--config", args.config, "JSON run configuration");
        auto* out = sub->add_option("--out", args.out, "output directory");
        if (needs_out) out->required();
        sub->add_option("--a", a, "override design.a");
        sub->add_option("--mu", mu, "override design.mu (and simulator.mu)");
    };
    auto* evaluate = app.add_subcommand("evaluate", "Gamma, lambda, k, |t|^2 and W(0) for one potential");
    common(evaluate, false);
    evaluate->add_option("--potential", args.potential, "potential CSV (x,V); default is the init well");
    auto* opt = app.add_subcommand("optimize", "minimize Gamma from the init well");
    common(opt, true);
    opt->add_option("--potential", args.potential, "starting potential CSV");
    opt->add_flag("--symmetric", symmetric, "optimize half the nodes and mirror");
    auto* sw = app.add_subcommand("sweep", "independent optimize runs over a or mu");
    common(sw, true);
    sw->add_option("--vary", args.vary, "a or mu")->check(CLI::IsMember({"a", "mu"}));
    sw->add_option("--values", args.values, "comma separated values")->delimiter(',')->required();
    sw->add_option("--jobs", args.jobs, "parallel runs")->check(CLI::PositiveNumber);
    sw->add_flag("--symmetric", symmetric, "optimize half the nodes and mirror");
    auto* sim = app.add_subcommand("simulate", "time-domain run from the bound state");
    common(sim, false);
    sim->add_option("--potential", args.potential, "potential CSV; default is the init well");
    sim->add_option("--epsilon", epsilon, "forcing amplitude");
    sim->add_option("--t-final", t_final, "final time");
    auto* filt = app.add_subcommand("filter", "time-domain run from bound state plus seeded noise");
    common(filt, false);
    filt->add_option("--potential", args.potential, "potential CSV; default is the init well");
    filt->add_option("--epsilon", epsilon, "forcing amplitude");
    filt->add_option("--t-final", t_final, "final time");
    filt->add_option("--seed", seed, "noise seed");
    filt->add_option("--noise", noise, "noise amplitude");
    auto* gc = app.add_subcommand("gradcheck", "analytic gradients against central differences");
    common(gc, false);
    gc->add_option("--potential", args.potential, "potential CSV; default is the init well");
    auto* rerun = app.add_subcommand("rerun", "repeat the run recorded in a manifest");
    rerun->add_option("--manifest", manifest, "manifest.json of an earlier run")->required();
    rerun->add_option("--out", args.out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 4;
    }

    try {
        if (rerun->parsed()) {
            std::ifstream in(manifest);
            if (!in) throw ConfigError("cannot open manifest " + manifest);
            json m;
            try {
                in >> m;
            } catch (const json::exception& e) {
                throw ConfigError(std::string("manifest is not valid JSON: ") + e.what());
            }
            const io::RunConfig cfg = io::parse_config(m.at("config"));
            const json& a0 = m.value("arguments", json::object());
            const std::string out = args.out;
            args = Args{};
            args.out = out;
            args.potential = a0.value("potential", std::string());
            args.vary = a0.value("vary", std::string("a"));
            args.values = a0.value("values", std::vector<double>{});
            args.jobs = a0.value("jobs", 1);
            return dispatch(m.at("command").get<std::string>(), cfg, args);
        }

        io::RunConfig cfg = args.config.empty() ? io::parse_config(json::object()) : io::load_config(args.config);
        json doc = io::to_json(cfg);
        if (a) doc["design"]["a"] = *a;
        if (mu) {
            doc["design"]["mu"] = *mu;
            doc["simulator"]["mu"] = *mu;
        }
        if (epsilon) doc["simulator"]["epsilon"] = *epsilon;
        if (t_final) {
            doc["simulator"]["t_final"] = *t_final;
            doc["simulator"]["fit_window"] = {cfg.fit_begin, *t_final};
        }
        if (seed) doc["simulator"]["seed"] = *seed;
        if (noise) doc["simulator"]["noise_amplitude"] = *noise;
        if (symmetric) doc["optimizer"]["symmetric"] = true;
        cfg = io::parse_config(doc);

        const std::string command = app.get_subcommands().front()->get_name();
        return dispatch(command, cfg, args);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 4;
    } catch (const DomainError& e) {
        std::cerr << "domain error: " << e.what() << '\n';
        return 2;
    } catch (const SolverFailure& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
