#include "pdp/io.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#ifndef PDP_VERSION
#define PDP_VERSION "unknown"
#endif

namespace pdp::io {

namespace {

void check_keys(const json& block, const std::string& name, const std::set<std::string>& allowed) {
    if (!block.is_object()) throw ConfigError("config block '" + name + "' must be an object");
    for (auto it = block.begin(); it != block.end(); ++it)
        if (!allowed.count(it.key())) throw ConfigError("unknown key '" + name + "." + it.key() + "'");
}

template <typename T>
void read(const json& block, const std::string& name, const char* key, T& out) {
    if (!block.contains(key)) return;
    try {
        out = block.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config key '" + name + "." + key + "' has the wrong type");
    }
}

Grid read_grid(const json& block, const std::string& name, const Grid& fallback) {
    check_keys(block, name, {"x_min", "x_max", "n"});
    double x_min = fallback.x_min, x_max = fallback.x_max;
    long long n = fallback.n;
    read(block, name, "x_min", x_min);
    read(block, name, "x_max", x_max);
    read(block, name, "n", n);
    try {
        return make_grid(x_min, x_max, static_cast<Index>(n));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(name + ": " + e.what());
    }
}

json grid_json(const Grid& g) { return {{"x_min", g.x_min}, {"x_max", g.x_max}, {"n", g.n}}; }

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

} // namespace

RunConfig::RunConfig() {
    design.a = 12.0;
    design.mu = 2.0;
    sim.domain = make_grid(-60.0, 60.0, 6001);
}

RunConfig parse_config(const json& doc) {
    RunConfig c;
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    check_keys(doc, "config", {"grid", "design", "init", "optimizer", "simulator", "sweep_k", "gradcheck"});

    if (doc.contains("grid")) c.grid = read_grid(doc["grid"], "grid", c.grid);

    bool sim_mu_given = false;
    if (doc.contains("design")) {
        const json& d = doc["design"];
        check_keys(d, "design",
                   {"a", "b", "mu", "delta", "beta_mode", "beta_halfwidth", "beta_height", "wronskian_tol"});
        read(d, "design", "a", c.design.a);
        read(d, "design", "b", c.design.b);
        read(d, "design", "mu", c.design.mu);
        read(d, "design", "delta", c.design.delta);
        read(d, "design", "wronskian_tol", c.design.wronskian_tol);
        read(d, "design", "beta_halfwidth", c.beta_halfwidth);
        read(d, "design", "beta_height", c.beta_height);
        std::string mode = "fixed";
        read(d, "design", "beta_mode", mode);
        if (mode == "fixed")
            c.design.beta_mode = BetaMode::Fixed;
        else if (mode == "equals_v")
            c.design.beta_mode = BetaMode::EqualsV;
        else
            throw ConfigError("design.beta_mode must be 'fixed' or 'equals_v'");
    }
    if (doc.contains("init")) {
        const json& d = doc["init"];
        check_keys(d, "init", {"shape", "A", "B"});
        read(d, "init", "shape", c.init_shape);
        read(d, "init", "A", c.init_depth);
        read(d, "init", "B", c.init_inverse_length);
        if (c.init_shape != "sech" && c.init_shape != "sech2") throw ConfigError("init.shape must be 'sech' or 'sech2'");
        if (!(c.init_depth > 0.0) || !(c.init_inverse_length > 0.0)) throw ConfigError("init.A and init.B must be positive");
    }
    if (doc.contains("optimizer")) {
        const json& d = doc["optimizer"];
        check_keys(d, "optimizer",
                   {"tau_schedule", "max_iterations", "max_stage_iterations", "memory", "armijo", "backtrack",
                    "max_backtracks", "grad_tol", "max_step", "min_step", "symmetric", "objective"});
        OptOptions& o = c.optimizer;
        read(d, "optimizer", "tau_schedule", o.tau_schedule);
        read(d, "optimizer", "max_iterations", o.max_iterations);
        read(d, "optimizer", "max_stage_iterations", o.max_stage_iterations);
        read(d, "optimizer", "memory", o.lbfgs.memory);
        read(d, "optimizer", "armijo", o.lbfgs.armijo);
        read(d, "optimizer", "backtrack", o.lbfgs.backtrack);
        read(d, "optimizer", "max_backtracks", o.lbfgs.max_backtracks);
        read(d, "optimizer", "grad_tol", o.lbfgs.grad_tol);
        read(d, "optimizer", "max_step", o.lbfgs.max_step);
        read(d, "optimizer", "min_step", o.lbfgs.min_step);
        read(d, "optimizer", "symmetric", o.symmetric);
        std::string form = "log_gamma";
        read(d, "optimizer", "objective", form);
        if (form == "log_gamma")
            o.form = ObjectiveForm::LogGamma;
        else if (form == "gamma")
            o.form = ObjectiveForm::Gamma;
        else
            throw ConfigError("optimizer.objective must be 'log_gamma' or 'gamma'");
        if (o.tau_schedule.empty()) throw ConfigError("optimizer.tau_schedule must not be empty");
        for (double t : o.tau_schedule)
            if (!(t > 0.0)) throw ConfigError("optimizer.tau_schedule entries must be positive");
        if (o.max_iterations < 0 || o.max_stage_iterations < 0 || o.lbfgs.memory < 1)
            throw ConfigError("optimizer iteration counts must be nonnegative and memory positive");
        if (!(o.lbfgs.backtrack > 0.0 && o.lbfgs.backtrack < 1.0)) throw ConfigError("optimizer.backtrack must lie in (0, 1)");
        if (!(o.lbfgs.armijo > 0.0 && o.lbfgs.armijo < 1.0)) throw ConfigError("optimizer.armijo must lie in (0, 1)");
    }
    if (doc.contains("simulator")) {
        const json& d = doc["simulator"];
        check_keys(d, "simulator",
                   {"epsilon", "mu", "t_final", "dt_max", "record_interval", "domain", "absorber", "noise_amplitude",
                    "seed", "fit_window"});
        read(d, "simulator", "epsilon", c.sim.epsilon);
        sim_mu_given = d.contains("mu");
        read(d, "simulator", "mu", c.sim.mu);
        read(d, "simulator", "t_final", c.sim.t_final);
        read(d, "simulator", "dt_max", c.sim.dt_max);
        read(d, "simulator", "record_interval", c.sim.record_interval);
        read(d, "simulator", "noise_amplitude", c.noise_amplitude);
        read(d, "simulator", "seed", c.seed);
        if (d.contains("domain")) c.sim.domain = read_grid(d["domain"], "simulator.domain", c.sim.domain);
        if (d.contains("absorber")) {
            const json& a = d["absorber"];
            check_keys(a, "simulator.absorber", {"width", "strength"});
            read(a, "simulator.absorber", "width", c.sim.absorber.width);
            read(a, "simulator.absorber", "strength", c.sim.absorber.strength);
        }
        if (d.contains("fit_window")) {
            std::vector<double> w;
            read(d, "simulator", "fit_window", w);
            if (w.size() != 2 || !(w[1] > w[0])) throw ConfigError("simulator.fit_window must be [t0, t1] with t1 > t0");
            c.fit_begin = w[0];
            c.fit_end = w[1];
        }
        if (!(c.noise_amplitude >= 0.0)) throw ConfigError("simulator.noise_amplitude must be nonnegative");
    }
    if (!sim_mu_given) c.sim.mu = c.design.mu;
    if (doc.contains("sweep_k")) {
        const json& d = doc["sweep_k"];
        check_keys(d, "sweep_k", {"k_min", "k_max", "count"});
        read(d, "sweep_k", "k_min", c.k_min);
        read(d, "sweep_k", "k_max", c.k_max);
        read(d, "sweep_k", "count", c.k_count);
        if (!(c.k_min > 0.0) || !(c.k_max >= c.k_min) || c.k_count < 1) throw ConfigError("sweep_k needs 0 < k_min <= k_max, count >= 1");
    }
    if (doc.contains("gradcheck")) {
        const json& d = doc["gradcheck"];
        check_keys(d, "gradcheck", {"directions", "epsilon", "seed", "tolerance"});
        read(d, "gradcheck", "directions", c.grad_directions);
        read(d, "gradcheck", "epsilon", c.grad_epsilon);
        read(d, "gradcheck", "seed", c.grad_seed);
        read(d, "gradcheck", "tolerance", c.grad_tolerance);
        if (c.grad_directions < 1 || !(c.grad_epsilon > 0.0) || !(c.grad_tolerance > 0.0))
            throw ConfigError("gradcheck needs directions >= 1 and positive epsilon, tolerance");
    }

    if (!(c.design.a < c.grid.x_max) || !(-c.design.a > c.grid.x_min))
        throw ConfigError("design.a must lie strictly inside the grid");
    try {
        c.design = design_on(c, c.grid);
        c.design.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("design: ") + e.what());
    }
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return parse_config(doc);
}

json to_json(const RunConfig& c) {
    const OptOptions& o = c.optimizer;
    return {
        {"grid", grid_json(c.grid)},
        {"design",
         {{"a", c.design.a},
          {"b", c.design.b},
          {"mu", c.design.mu},
          {"delta", c.design.delta},
          {"wronskian_tol", c.design.wronskian_tol},
          {"beta_mode", c.design.beta_mode == BetaMode::Fixed ? "fixed" : "equals_v"},
          {"beta_halfwidth", c.beta_halfwidth},
          {"beta_height", c.beta_height}}},
        {"init", {{"shape", c.init_shape}, {"A", c.init_depth}, {"B", c.init_inverse_length}}},
        {"optimizer",
         {{"tau_schedule", o.tau_schedule},
          {"max_iterations", o.max_iterations},
          {"max_stage_iterations", o.max_stage_iterations},
          {"memory", o.lbfgs.memory},
          {"armijo", o.lbfgs.armijo},
          {"backtrack", o.lbfgs.backtrack},
          {"max_backtracks", o.lbfgs.max_backtracks},
          {"grad_tol", o.lbfgs.grad_tol},
          {"max_step", o.lbfgs.max_step},
          {"min_step", o.lbfgs.min_step},
          {"symmetric", o.symmetric},
          {"objective", o.form == ObjectiveForm::LogGamma ? "log_gamma" : "gamma"}}},
        {"simulator",
         {{"epsilon", c.sim.epsilon},
          {"mu", c.sim.mu},
          {"t_final", c.sim.t_final},
          {"dt_max", c.sim.dt_max},
          {"record_interval", c.sim.record_interval},
          {"domain", grid_json(c.sim.domain)},
          {"absorber", {{"width", c.sim.absorber.width}, {"strength", c.sim.absorber.strength}}},
          {"noise_amplitude", c.noise_amplitude},
          {"seed", c.seed},
          {"fit_window", {c.fit_begin, c.fit_end < 0.0 ? c.sim.t_final : c.fit_end}}}},
        {"sweep_k", {{"k_min", c.k_min}, {"k_max", c.k_max}, {"count", c.k_count}}},
        {"gradcheck",
         {{"directions", c.grad_directions},
          {"epsilon", c.grad_epsilon},
          {"seed", c.grad_seed},
          {"tolerance", c.grad_tolerance}}},
    };
}

DesignParams design_on(const RunConfig& cfg, const Grid& grid) {
    DesignParams d = cfg.design;
    if (d.beta_mode == BetaMode::Fixed)
        d.beta = indicator(cfg.beta_halfwidth, cfg.beta_height, grid);
    else
        d.beta.reset();
    return d;
}

PotentialField initial_potential(const RunConfig& cfg) {
    const Grid& g = cfg.grid;
    if (cfg.init_shape == "sech") return sech_well(cfg.init_depth, cfg.init_inverse_length, cfg.design.a, g);
    VectorXd v(g.n);
    for (Index j = 0; j < g.n; ++j) {
        const double c = std::cosh(cfg.init_inverse_length * g.x(j));
        v(j) = -cfg.init_depth / (c * c);
    }
    return truncated(g, std::move(v), cfg.design.a);
}

PotentialField read_potential_csv(const std::filesystem::path& path, double support_halfwidth) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open potential file " + path.string());
    std::string line;
    std::getline(in, line);
    std::vector<double> xs, vs;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string a, b;
        if (!std::getline(row, a, ',') || !std::getline(row, b, ','))
            throw ConfigError("potential file " + path.string() + " has a malformed row");
        try {
            xs.push_back(std::stod(a));
            vs.push_back(std::stod(b));
        } catch (const std::exception&) {
            throw ConfigError("potential file " + path.string() + " has a non-numeric entry");
        }
    }
    if (xs.size() < 3) throw ConfigError("potential file " + path.string() + " has fewer than 3 rows");
    const Grid g = make_grid(xs.front(), xs.back(), static_cast<Index>(xs.size()));
    for (std::size_t j = 0; j < xs.size(); ++j)
        if (std::abs(xs[j] - g.x(static_cast<Index>(j))) > 1e-9 * (1.0 + std::abs(xs[j])))
            throw ConfigError("potential file " + path.string() + " is not on a uniform grid");
    try {
        return PotentialField(g, Eigen::Map<const VectorXd>(vs.data(), static_cast<Index>(vs.size())),
                              support_halfwidth);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("potential file " + path.string() + ": " + e.what());
    }
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& columns) {
    if (header.size() != columns.size()) throw std::invalid_argument("header and column counts differ");
    const std::size_t rows = columns.empty() ? 0 : columns.front().size();
    for (const auto& c : columns)
        if (c.size() != rows) throw std::invalid_argument("CSV columns have different lengths");
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw Error("cannot write " + path.string());
    for (std::size_t i = 0; i < header.size(); ++i) std::fprintf(f, i ? ",%s" : "%s", header[i].c_str());
    std::fputc('\n', f);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t i = 0; i < columns.size(); ++i) std::fprintf(f, i ? ",%.17g" : "%.17g", columns[i][r]);
        std::fputc('\n', f);
    }
    if (std::fclose(f) != 0) throw Error("error while writing " + path.string());
}

Manifest::Manifest(std::string command, json config, std::filesystem::path out_dir) : out_(std::move(out_dir)) {
    std::filesystem::create_directories(out_);
    doc_["command"] = std::move(command);
    doc_["config"] = std::move(config);
    doc_["code_version"] = code_version();
    doc_["started"] = utc_now();
    doc_["outputs"] = json::array();
    doc_["headline"] = json::object();
}

std::filesystem::path Manifest::file(const std::string& name) {
    doc_["outputs"].push_back(name);
    return out_ / name;
}

void Manifest::write() {
    doc_["finished"] = utc_now();
    std::ofstream out(out_ / "manifest.json");
    out << doc_.dump(2) << '\n';
    if (!out) throw Error("cannot write manifest in " + out_.string());
}

std::string code_version() { return PDP_VERSION; }

} // namespace pdp::io
