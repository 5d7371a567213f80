#pragma once

#include "pdp/fgr.hpp"
#include "pdp/grid.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace pdp {

/// Strictly positive slack in each constraint: lambda + mu, W(0)^2 - delta and
/// b^2 - ||V||_{H^1}^2.
struct Margins {
    double resonance = 0.0;
    double wronskian = 0.0;
    double h1 = 0.0;

    bool feasible() const { return resonance > 0.0 && wronskian > 0.0 && h1 > 0.0; }
};

/// Which function of the rate carries the barrier terms.
enum class ObjectiveForm { Gamma, LogGamma };

/// Free design nodes (|x_j| <= a, or half of them under mirror symmetry) and
/// the barrier weight tau.
struct BarrierProblem {
    DesignParams params;
    double tau = 1e-2;
    bool symmetric = false;
    ObjectiveForm form = ObjectiveForm::Gamma;
    Grid grid;
    std::vector<Index> free_nodes;
    VectorXd weights; ///< quadrature weight of each design variable (h, or 2h for mirrored pairs)

    BarrierProblem(const Grid& g, DesignParams p, bool mirror);

    Index design_dim() const { return static_cast<Index>(free_nodes.size()); }
    PotentialField potential(const VectorXd& z) const;
    VectorXd design(const PotentialField& V) const;
    /// Riesz representative of a full-grid gradient field in the design metric.
    VectorXd reduce(const VectorXd& field) const;
};

struct BarrierEvaluation {
    double value = 0.0;
    double gamma = 0.0;
    double lambda = 0.0;
    double wronskian = 0.0;
    double wronskian_variance = 0.0;
    double transmission_sq = 0.0;
    Margins margins;
    VectorXd gradient; ///< full grid, zero outside [-a, a]; empty unless requested
};

/// Gamma - tau [log(lambda + mu) + log(W^2 - delta) + log(b^2 - ||V||^2)]
/// (log Gamma in place of Gamma for ObjectiveForm::LogGamma). Throws
/// InfeasiblePoint when a margin is not positive, the discrete H_V holds more
/// than one bound state or the Wronskian variance check fails.
BarrierEvaluation barrier_objective(const PotentialField& V, const BarrierProblem& problem, bool with_gradient,
                                    FgrCache* cache = nullptr);

/// Limited-memory BFGS inverse-Hessian model in the inner product
/// <u, v> = sum_i w_i u_i v_i.
class Lbfgs {
public:
    Lbfgs(VectorXd weights, int memory = 10);

    /// Two-loop recursion; -g when the history is empty.
    VectorXd direction(const VectorXd& g) const;
    /// Stores (s, y) if the curvature <s, y> is positive; returns whether it did.
    bool update(const VectorXd& s, const VectorXd& y);
    void reset();
    std::size_t size() const { return s_.size(); }
    double dot(const VectorXd& a, const VectorXd& b) const { return (weights_.array() * a.array() * b.array()).sum(); }

private:
    VectorXd weights_;
    int memory_;
    std::vector<VectorXd> s_, y_;
    std::vector<double> rho_;
};

struct LbfgsOptions {
    int memory = 10;
    double armijo = 1e-4;
    double backtrack = 0.5;
    int max_backtracks = 60;
    double grad_tol = 1e-10;
    int max_iterations = 150;
    double max_step = 0.25; ///< cap on max_i |x_i change| per step
    double min_step = 1e-12; ///< relative step below which the search is declared failed
};

enum class StopReason { GradientTolerance, LineSearchFailure, IterationLimit };
std::string to_string(StopReason r);

/// Smooth objective with a feasible region signalled by exceptions: value()
/// throws pdp::Error outside it, and the line search backtracks.
struct SmoothObjective {
    std::function<double(const VectorXd&)> value;
    std::function<VectorXd(const VectorXd&)> gradient; ///< Riesz representative in the weighted metric
};

struct MinimizeResult {
    VectorXd x;
    double value = 0.0;
    VectorXd gradient;
    int iterations = 0;
    StopReason stop = StopReason::IterationLimit;
};

/// Line-search L-BFGS with Armijo backtracking. `on_accept(iter, x, value,
/// grad_norm, step)` runs after every accepted step.
MinimizeResult minimize_lbfgs(const SmoothObjective& f, VectorXd x0, const VectorXd& weights,
                              const LbfgsOptions& opts,
                              const std::function<void(int, const VectorXd&, double, double, double)>& on_accept = {});

struct OptOptions {
    LbfgsOptions lbfgs;
    std::vector<double> tau_schedule{1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8};
    int max_iterations = 150;       ///< total across all tau stages
    int max_stage_iterations = 60;
    bool symmetric = false;
    ObjectiveForm form = ObjectiveForm::LogGamma;
};

struct TraceRow {
    int iter = 0;
    double tau = 0.0;
    double gamma = 0.0;
    double barrier_value = 0.0;
    double grad_norm = 0.0;
    double step_length = 0.0;
    Margins margins;
    double wronskian_variance = 0.0;
};

struct OptTrace {
    std::vector<TraceRow> rows;
};

struct OptResult {
    PotentialField v_opt;
    OptTrace trace;
    double gamma_init = 0.0;
    double gamma_opt = 0.0;
    BarrierEvaluation final_eval;
    int iterations = 0;
    StopReason stop = StopReason::IterationLimit;
};

/// Barrier continuation over opts.tau_schedule. Throws InfeasiblePoint when
/// V_init is outside the relaxed admissible set.
OptResult optimize(const PotentialField& v_init, const DesignParams& params, const OptOptions& opts);

struct SweepEntry {
    std::string label;
    PotentialField v_init;
    DesignParams params;
    OptOptions options;
};

struct DesignRun {
    std::string label;
    DesignParams params;
    bool ok = false;
    std::string error;
    std::optional<OptResult> result;
};

/// Independent optimize runs on up to `jobs` threads; failures are recorded
/// per run and do not stop the sweep. Output order follows the input.
std::vector<DesignRun> sweep(const std::vector<SweepEntry>& entries, int jobs = 1);

/// One analytic-versus-central-difference comparison along a direction w.
struct GradCheckEntry {
    std::string functional; ///< "gamma", "lambda", "k", "wronskian" or "barrier"
    int direction = 0;
    double analytic = 0.0;
    double finite_difference = 0.0;
    double rel_error = 0.0;
};

struct GradCheckOptions {
    int directions = 10;
    double epsilon = 1e-4;
    std::uint64_t seed = 7;
    bool include_barrier = true;
    double tau = 1e-2;
    ObjectiveForm form = ObjectiveForm::LogGamma;
};

/// Random smooth directions supported in [-a, a] (mirror-symmetric when V
/// is), each checked for Gamma, lambda, k, W(0) and the barrier objective.
std::vector<GradCheckEntry> gradient_check(const PotentialField& V, const DesignParams& params,
                                           const GradCheckOptions& opts);

/// Smooth random direction: a sum of Gaussian bumps inside [-a, a].
VectorXd random_direction(const Grid& grid, double a, bool symmetric, std::uint64_t seed);

/// Mechanism label for an optimum: "A" when |t(k)|^2 < 1e-2, "B" when
/// |t(k)|^2 > 0.25, otherwise "mixed".
std::string classify_mechanism(double transmission_sq);

} // namespace pdp
