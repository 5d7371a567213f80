#pragma once

#include "pdp/grid.hpp"
#include "pdp/spectral.hpp"

#include <cstdint>
#include <memory>
#include <shared_mutex>

namespace pdp {

/// Fermi golden rule rate Gamma[V] = (|m_+|^2 + |m_-|^2) / (16 k) with
/// m_{+-} = <beta psi, e_{+-}(., k)> and k = sqrt(lambda + mu).
struct FgrResult {
    double gamma = 0.0;
    double k_res = 0.0;
    Complex m_plus{0.0, 0.0};
    Complex m_minus{0.0, 0.0};
    BoundState bound_state;
    ScatteringState scattering;
    VectorXd beta;   ///< forcing profile actually used (beta or V)

    double lambda() const { return bound_state.lambda; }
    double transmission_sq() const { return std::norm(scattering.t); }
};

/// Riesz representative of a functional derivative, zero outside [-a, a].
struct GradientField {
    Grid grid;
    VectorXd values;
    double support_halfwidth = 0.0;

    /// <grad, w> by the trapezoid rule.
    double pair(const VectorXd& w) const { return trapezoid(values.cwiseProduct(w), grid.h); }
};

/// Gamma through the distorted plane waves. Throws NoBoundState or
/// ResonanceBelowCutoff.
FgrResult golden_rule_rate(const PotentialField& V, const DesignParams& params);

/// Same rate assembled as |t|^2 / (16 k) * sum |<beta psi, f_{+-}>|^2, with the
/// Jost solutions f_{+-} marched independently through the three-point
/// recurrence and t taken from their Casoratian.
double golden_rule_rate_jost(const PotentialField& V, const DesignParams& params);

/// Jost solutions at k: f_+ = exp(i kappa x) right of the support, f_- =
/// exp(-i kappa x) left of it, plus t = C_0 / Cas(f_+, f_-).
struct JostSolutions {
    double kappa = 0.0;
    VectorXcd f_plus, f_minus;
    Complex t{0.0, 0.0};
};
JostSolutions jost_solutions(const PotentialField& V, double k);

/// d lambda / dV = psi^2.
GradientField lambda_gradient(const BoundState& bs, const Grid& grid, double a);

/// d k / dV = psi^2 / (2 k).
GradientField k_gradient(const BoundState& bs, double k_res, const Grid& grid, double a);

/// d Gamma / dV assembled from the bound-state, distorted-wave and wavenumber
/// variations (plus the beta = V term in that mode). The overload taking an
/// FgrResult reuses its eigenpair and distorted plane waves.
GradientField golden_rule_gradient(const PotentialField& V, const DesignParams& params);
GradientField golden_rule_gradient(const PotentialField& V, const DesignParams& params, const FgrResult& fgr);

/// d e_{+-}(., k) / dk at fixed V (the A_{+-} functions). Exposed for tests.
std::pair<VectorXcd, VectorXcd> plane_wave_k_derivative(const PotentialField& V, const ScatteringState& s);

/// d W(0) / dV = -eta_+ eta_-.
GradientField wronskian_gradient(const PotentialField& V);
GradientField wronskian_gradient(const PotentialField& V, const WronskianResult& w);

/// 64-bit FNV-1a digest of the potential values and grid.
std::uint64_t content_hash(const PotentialField& V);

/// Memo of the last golden-rule evaluation, keyed by potential content and
/// forcing parameters, so objective and gradient share their solves.
class FgrCache {
public:
    std::shared_ptr<const FgrResult> evaluate(const PotentialField& V, const DesignParams& params);
    std::size_t misses() const { return misses_; }

private:
    std::uint64_t key(const PotentialField& V, const DesignParams& params) const;

    mutable std::shared_mutex mutex_;
    std::uint64_t key_ = 0;
    std::shared_ptr<const FgrResult> value_;
    std::size_t misses_ = 0;
};

} // namespace pdp
