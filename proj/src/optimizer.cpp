#include "pdp/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <stdexcept>
#include <thread>

namespace pdp {

BarrierProblem::BarrierProblem(const Grid& g, DesignParams p, bool mirror)
    : params(std::move(p)), symmetric(mirror), grid(g) {
    params.validate();
    if (mirror && !g.symmetric()) throw std::invalid_argument("mirror symmetry needs a grid symmetric about 0");
    std::vector<double> w;
    for (Index j = 0; j < g.n; ++j) {
        if (!in_support(g.x(j), params.a)) continue;
        if (mirror && j > g.mirror(j)) continue;
        free_nodes.push_back(j);
        w.push_back(mirror && j != g.mirror(j) ? 2.0 * g.h : g.h);
    }
    if (free_nodes.empty()) throw std::invalid_argument("support holds no grid nodes");
    weights = Eigen::Map<const VectorXd>(w.data(), static_cast<Index>(w.size()));
}

PotentialField BarrierProblem::potential(const VectorXd& z) const {
    if (z.size() != design_dim()) throw std::invalid_argument("design vector has wrong length");
    VectorXd v = VectorXd::Zero(grid.n);
    for (Index i = 0; i < design_dim(); ++i) {
        const Index j = free_nodes[static_cast<std::size_t>(i)];
        v(j) = z(i);
        if (symmetric) v(grid.mirror(j)) = z(i);
    }
    return PotentialField(grid, std::move(v), params.a);
}

VectorXd BarrierProblem::design(const PotentialField& V) const {
    if (!(V.grid == grid)) throw std::invalid_argument("potential lives on a different grid");
    VectorXd z(design_dim());
    for (Index i = 0; i < design_dim(); ++i) {
        const Index j = free_nodes[static_cast<std::size_t>(i)];
        z(i) = symmetric ? 0.5 * (V.values(j) + V.values(grid.mirror(j))) : V.values(j);
    }
    return z;
}

VectorXd BarrierProblem::reduce(const VectorXd& field) const {
    VectorXd z(design_dim());
    for (Index i = 0; i < design_dim(); ++i) {
        const Index j = free_nodes[static_cast<std::size_t>(i)];
        z(i) = symmetric ? 0.5 * (field(j) + field(grid.mirror(j))) : field(j);
    }
    return z;
}

BarrierEvaluation barrier_objective(const PotentialField& V, const BarrierProblem& problem, bool with_gradient,
                                    FgrCache* cache) {
    const DesignParams& p = problem.params;
    std::shared_ptr<const FgrResult> fgr =
        cache ? cache->evaluate(V, p) : std::make_shared<const FgrResult>(golden_rule_rate(V, p));
    if (fgr->bound_state.count_negative != 1)
        throw InfeasiblePoint("H_V has " + std::to_string(fgr->bound_state.count_negative) + " bound states");
    const WronskianResult wr = wronskian_at_zero(V, p.wronskian_tol);
    if (!wr.valid) throw InfeasiblePoint("Wronskian variance check failed");
    const double h1 = h1_norm_sq(V);

    BarrierEvaluation e;
    e.gamma = fgr->gamma;
    e.lambda = fgr->lambda();
    e.wronskian = wr.w0;
    e.wronskian_variance = wr.variance;
    e.transmission_sq = fgr->transmission_sq();
    e.margins = {e.lambda + p.mu, wr.w0 * wr.w0 - p.delta, p.b * p.b - h1};
    if (!e.margins.feasible()) throw InfeasiblePoint("iterate violates a constraint");

    double objective = e.gamma;
    if (problem.form == ObjectiveForm::LogGamma) {
        if (!(e.gamma > 0.0)) throw DomainError("log-rate objective needs a positive rate");
        objective = std::log(e.gamma);
    }
    const double tau = problem.tau;
    e.value = objective -
              tau * (std::log(e.margins.resonance) + std::log(e.margins.wronskian) + std::log(e.margins.h1));
    if (!with_gradient) return e;

    VectorXd g = golden_rule_gradient(V, p, *fgr).values;
    if (problem.form == ObjectiveForm::LogGamma) g /= e.gamma;
    const VectorXd mask = support_mask(V.grid, p.a);
    const VectorXd dlambda = fgr->bound_state.psi.array().square().matrix();
    const VectorXd dw = wronskian_gradient(V, wr).values;
    const VectorXd dh1 = h1_norm_sq_gradient(V);
    g -= tau * (dlambda / e.margins.resonance + (2.0 * wr.w0 / e.margins.wronskian) * dw - dh1 / e.margins.h1);
    e.gradient = g.cwiseProduct(mask);
    return e;
}

Lbfgs::Lbfgs(VectorXd weights, int memory) : weights_(std::move(weights)), memory_(memory) {
    if (memory < 1) throw std::invalid_argument("L-BFGS memory must be positive");
}

VectorXd Lbfgs::direction(const VectorXd& g) const {
    if (s_.empty()) return -g;
    const std::size_t m = s_.size();
    std::vector<double> alpha(m);
    VectorXd q = g;
    for (std::size_t i = m; i-- > 0;) {
        alpha[i] = rho_[i] * dot(s_[i], q);
        q -= alpha[i] * y_[i];
    }
    VectorXd r = (dot(s_.back(), y_.back()) / dot(y_.back(), y_.back())) * q;
    for (std::size_t i = 0; i < m; ++i) {
        const double beta = rho_[i] * dot(y_[i], r);
        r += (alpha[i] - beta) * s_[i];
    }
    return -r;
}

bool Lbfgs::update(const VectorXd& s, const VectorXd& y) {
    const double sy = dot(s, y);
    if (!(sy > 1e-12 * std::sqrt(dot(s, s) * dot(y, y)))) return false;
    if (static_cast<int>(s_.size()) == memory_) {
        s_.erase(s_.begin());
        y_.erase(y_.begin());
        rho_.erase(rho_.begin());
    }
    s_.push_back(s);
    y_.push_back(y);
    rho_.push_back(1.0 / sy);
    return true;
}

void Lbfgs::reset() {
    s_.clear();
    y_.clear();
    rho_.clear();
}

std::string to_string(StopReason r) {
    switch (r) {
    case StopReason::GradientTolerance: return "gradient_tolerance";
    case StopReason::LineSearchFailure: return "line_search_failure";
    case StopReason::IterationLimit: return "iteration_limit";
    }
    return "unknown";
}

MinimizeResult minimize_lbfgs(const SmoothObjective& f, VectorXd x0, const VectorXd& weights,
                              const LbfgsOptions& opts,
                              const std::function<void(int, const VectorXd&, double, double, double)>& on_accept) {
    MinimizeResult res;
    res.x = std::move(x0);
    res.value = f.value(res.x);
    res.gradient = f.gradient(res.x);
    Lbfgs model(weights, opts.memory);

    while (true) {
        const double gnorm = std::sqrt(model.dot(res.gradient, res.gradient));
        if (gnorm <= opts.grad_tol) {
            res.stop = StopReason::GradientTolerance;
            return res;
        }
        if (res.iterations >= opts.max_iterations) {
            res.stop = StopReason::IterationLimit;
            return res;
        }
        VectorXd d = model.direction(res.gradient);
        double slope = model.dot(res.gradient, d);
        if (!(slope < 0.0)) {
            model.reset();
            d = -res.gradient;
            slope = -gnorm * gnorm;
        }
        double alpha = 1.0;
        const double dmax = d.cwiseAbs().maxCoeff();
        if (alpha * dmax > opts.max_step) alpha = opts.max_step / dmax;

        bool accepted = false;
        VectorXd trial;
        double ft = 0.0;
        for (int b = 0; b < opts.max_backtracks; ++b) {
            trial = res.x + alpha * d;
            try {
                ft = f.value(trial);
                if (ft <= res.value + opts.armijo * alpha * slope) {
                    accepted = true;
                    break;
                }
            } catch (const Error&) {
                // outside the feasible region: shrink
            }
            alpha *= opts.backtrack;
        }
        // A step that no longer moves x counts as a failed search.
        if (!accepted || alpha * dmax <= opts.min_step * (1.0 + res.x.cwiseAbs().maxCoeff())) {
            res.stop = StopReason::LineSearchFailure;
            return res;
        }
        VectorXd gt = f.gradient(trial);
        model.update(trial - res.x, gt - res.gradient);
        const double step = alpha * std::sqrt(model.dot(d, d));
        res.x = std::move(trial);
        res.value = ft;
        res.gradient = std::move(gt);
        ++res.iterations;
        if (on_accept) on_accept(res.iterations, res.x, res.value, std::sqrt(model.dot(res.gradient, res.gradient)), step);
    }
}

OptResult optimize(const PotentialField& v_init, const DesignParams& params, const OptOptions& opts) {
    if (opts.tau_schedule.empty()) throw std::invalid_argument("empty barrier schedule");
    BarrierProblem problem(v_init.grid, params, opts.symmetric);
    problem.form = opts.form;
    if (opts.symmetric && !v_init.is_symmetric(1e-12))
        throw std::invalid_argument("symmetric optimization needs a symmetric starting potential");
    if (std::abs(v_init.support_halfwidth - params.a) > 1e-12)
        throw std::invalid_argument("starting potential support differs from the design support");

    FgrCache cache;
    problem.tau = opts.tau_schedule.front();
    VectorXd z = problem.design(v_init);
    BarrierEvaluation current = barrier_objective(problem.potential(z), problem, true, &cache);

    OptResult out{problem.potential(z), {}, current.gamma, current.gamma, current, 0, StopReason::IterationLimit};
    auto record = [&](int iter, const BarrierEvaluation& e, double gnorm, double step) {
        out.trace.rows.push_back({iter, problem.tau, e.gamma, e.value, gnorm, step, e.margins, e.wronskian_variance});
    };
    record(0, current, std::sqrt((problem.weights.array() * problem.reduce(current.gradient).array().square()).sum()),
           0.0);

    int total = 0;
    for (double tau : opts.tau_schedule) {
        if (total >= opts.max_iterations) break;
        problem.tau = tau;
        BarrierEvaluation last;
        SmoothObjective f;
        f.value = [&](const VectorXd& x) { return barrier_objective(problem.potential(x), problem, false, &cache).value; };
        f.gradient = [&](const VectorXd& x) {
            last = barrier_objective(problem.potential(x), problem, true, &cache);
            return problem.reduce(last.gradient);
        };
        LbfgsOptions stage = opts.lbfgs;
        stage.max_iterations = std::min(opts.max_stage_iterations, opts.max_iterations - total);
        const int offset = total;
        const MinimizeResult r = minimize_lbfgs(f, z, problem.weights, stage,
                                                [&](int it, const VectorXd&, double, double gnorm, double step) {
                                                    record(offset + it, last, gnorm, step);
                                                });
        z = r.x;
        total += r.iterations;
        out.stop = r.stop;
    }
    out.v_opt = problem.potential(z);
    out.final_eval = barrier_objective(out.v_opt, problem, false, &cache);
    out.gamma_opt = out.final_eval.gamma;
    out.iterations = total;
    return out;
}

std::vector<DesignRun> sweep(const std::vector<SweepEntry>& entries, int jobs) {
    std::vector<DesignRun> runs(entries.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < entries.size(); i = next++) {
            const SweepEntry& e = entries[i];
            DesignRun& run = runs[i];
            run.label = e.label;
            run.params = e.params;
            try {
                run.result = optimize(e.v_init, e.params, e.options);
                run.ok = true;
            } catch (const std::exception& ex) {
                run.error = ex.what();
            }
        }
    };
    const int n = std::max(1, std::min<int>(jobs, static_cast<int>(entries.size())));
    if (n == 1) {
        worker();
        return runs;
    }
    std::vector<std::thread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    return runs;
}

VectorXd random_direction(const Grid& grid, double a, bool symmetric, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    VectorXd w = VectorXd::Zero(grid.n);
    for (int b = 0; b < 4; ++b) {
        const double width = (0.05 + 0.2 * unit(rng)) * a;
        const double centre = (2.0 * unit(rng) - 1.0) * (a - width);
        const double amp = 2.0 * unit(rng) - 1.0;
        for (Index j = 0; j < grid.n; ++j) {
            const double x = grid.x(j);
            const double bump = std::exp(-0.5 * std::pow((x - centre) / width, 2));
            const double mirror = std::exp(-0.5 * std::pow((x + centre) / width, 2));
            w(j) += amp * (symmetric ? 0.5 * (bump + mirror) : bump);
        }
    }
    return w.cwiseProduct(support_mask(grid, a));
}

std::vector<GradCheckEntry> gradient_check(const PotentialField& V, const DesignParams& params,
                                           const GradCheckOptions& opts) {
    params.validate();
    const Grid& g = V.grid;
    const double a = V.support_halfwidth;
    const bool sym = g.symmetric() && V.is_symmetric(1e-12);
    BarrierProblem problem(g, params, false);
    problem.tau = opts.tau;
    problem.form = opts.form;

    const FgrResult base = golden_rule_rate(V, params);
    const VectorXd g_gamma = golden_rule_gradient(V, params, base).values;
    const VectorXd g_lambda = lambda_gradient(base.bound_state, g, a).values;
    const VectorXd g_k = k_gradient(base.bound_state, base.k_res, g, a).values;
    const VectorXd g_w = wronskian_gradient(V, wronskian_at_zero(V, params.wronskian_tol)).values;
    VectorXd g_barrier;
    if (opts.include_barrier) g_barrier = barrier_objective(V, problem, true).gradient;

    auto rel = [](double an, double fd) {
        const double scale = std::max(std::abs(an), std::abs(fd));
        return scale > 0.0 ? std::abs(an - fd) / scale : 0.0;
    };
    std::vector<GradCheckEntry> out;
    for (int d = 0; d < opts.directions; ++d) {
        const VectorXd w = random_direction(g, a, sym, opts.seed + static_cast<std::uint64_t>(d));
        const PotentialField vp(g, V.values + opts.epsilon * w, a);
        const PotentialField vm(g, V.values - opts.epsilon * w, a);
        const FgrResult fp = golden_rule_rate(vp, params);
        const FgrResult fm = golden_rule_rate(vm, params);
        const double two_eps = 2.0 * opts.epsilon;
        auto add = [&](const char* name, const VectorXd& grad, double plus, double minus) {
            const double an = trapezoid(grad.cwiseProduct(w), g.h);
            const double fd = (plus - minus) / two_eps;
            out.push_back({name, d, an, fd, rel(an, fd)});
        };
        add("gamma", g_gamma, fp.gamma, fm.gamma);
        add("lambda", g_lambda, fp.lambda(), fm.lambda());
        add("k", g_k, fp.k_res, fm.k_res);
        add("wronskian", g_w, wronskian_at_zero(vp, params.wronskian_tol).w0,
            wronskian_at_zero(vm, params.wronskian_tol).w0);
        if (opts.include_barrier)
            add("barrier", g_barrier, barrier_objective(vp, problem, false).value,
                barrier_objective(vm, problem, false).value);
    }
    return out;
}

std::string classify_mechanism(double transmission_sq) {
    if (transmission_sq < 1e-2) return "A";
    if (transmission_sq > 0.25) return "B";
    return "mixed";
}

} // namespace pdp
