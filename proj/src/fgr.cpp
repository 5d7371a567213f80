#include "pdp/fgr.hpp"

#include <cmath>
#include <cstring>
#include <mutex>
#include <stdexcept>

namespace pdp {

namespace {

double resonant_wavenumber(double lambda, double mu) {
    const double k2 = lambda + mu;
    if (!(k2 > 0.0)) throw ResonanceBelowCutoff(k2);
    return std::sqrt(k2);
}

VectorXd masked(VectorXd v, const Grid& grid, double a) {
    return v.cwiseProduct(support_mask(grid, a));
}

Complex matrix_element(const VectorXd& beta_psi, const VectorXcd& e, double h) {
    return trapezoid(beta_psi.cast<Complex>().cwiseProduct(e), h);
}

} // namespace

FgrResult golden_rule_rate(const PotentialField& V, const DesignParams& params) {
    FgrResult r;
    r.bound_state = solve_ground_state(V);
    r.k_res = resonant_wavenumber(r.bound_state.lambda, params.mu);
    r.scattering = distorted_plane_waves(V, r.k_res);
    r.beta = params.beta_values(V);
    const VectorXd beta_psi = r.beta.cwiseProduct(r.bound_state.psi);
    const double h = V.grid.h;
    r.m_plus = matrix_element(beta_psi, r.scattering.e_plus, h);
    r.m_minus = matrix_element(beta_psi, r.scattering.e_minus, h);
    r.gamma = (std::norm(r.m_plus) + std::norm(r.m_minus)) / (16.0 * r.k_res);
    return r;
}

JostSolutions jost_solutions(const PotentialField& V, double k) {
    const Grid& g = V.grid;
    const Index n = g.n;
    const double h = g.h;
    JostSolutions js;
    js.kappa = discrete_wavenumber(k, h);
    js.f_plus.resize(n);
    js.f_minus.resize(n);
    auto wave = [&](Index j, double sign) { return std::exp(Complex(0.0, sign * js.kappa * g.x(j))); };

    js.f_plus(n - 1) = wave(n - 1, 1.0);
    js.f_plus(n - 2) = wave(n - 2, 1.0);
    for (Index j = n - 2; j >= 1; --j)
        js.f_plus(j - 1) = (2.0 + h * h * (V.values(j) - k * k)) * js.f_plus(j) - js.f_plus(j + 1);

    js.f_minus(0) = wave(0, -1.0);
    js.f_minus(1) = wave(1, -1.0);
    for (Index j = 1; j + 1 < n; ++j)
        js.f_minus(j + 1) = (2.0 + h * h * (V.values(j) - k * k)) * js.f_minus(j) - js.f_minus(j - 1);

    const Index c = n / 2;
    const Complex cas = js.f_plus(c) * js.f_minus(c + 1) - js.f_plus(c + 1) * js.f_minus(c);
    const Complex cas_free(0.0, -2.0 * std::sin(js.kappa * h));
    if (std::abs(cas) == 0.0 || !std::isfinite(std::abs(cas)))
        throw SolverFailure("Jost solutions are linearly dependent");
    js.t = cas_free / cas;
    return js;
}

double golden_rule_rate_jost(const PotentialField& V, const DesignParams& params) {
    const BoundState bs = solve_ground_state(V);
    const double k = resonant_wavenumber(bs.lambda, params.mu);
    const JostSolutions js = jost_solutions(V, k);
    const VectorXd beta_psi = params.beta_values(V).cwiseProduct(bs.psi);
    const double h = V.grid.h;
    const double sum = std::norm(matrix_element(beta_psi, js.f_plus, h)) +
                       std::norm(matrix_element(beta_psi, js.f_minus, h));
    return std::norm(js.t) * sum / (16.0 * k);
}

GradientField lambda_gradient(const BoundState& bs, const Grid& grid, double a) {
    return {grid, masked(bs.psi.array().square().matrix(), grid, a), a};
}

GradientField k_gradient(const BoundState& bs, double k_res, const Grid& grid, double a) {
    if (!(k_res > 0.0)) throw std::invalid_argument("resonant wavenumber must be positive");
    return {grid, masked(bs.psi.array().square().matrix() / (2.0 * k_res), grid, a), a};
}

std::pair<VectorXcd, VectorXcd> plane_wave_k_derivative(const PotentialField& V, const ScatteringState& s) {
    const Grid& g = V.grid;
    const Index n = g.n;
    const double h = g.h;
    const double k = s.k;
    const double kh2 = 0.5 * k * h;
    const double dkappa = 1.0 / std::sqrt(1.0 - kh2 * kh2);
    const Complex out = std::exp(Complex(0.0, s.kappa * h));
    // d/dk of the outgoing closure entries -exp(i kappa h) / h^2
    const Complex dcorner = -Complex(0.0, dkappa) * out / h;
    const OutgoingResolvent R(V, k);

    auto channel = [&](const VectorXcd& phi, double sign) {
        VectorXcd E(n), dE(n);
        for (Index j = 0; j < n; ++j) {
            E(j) = std::exp(Complex(0.0, sign * s.kappa * g.x(j)));
            dE(j) = Complex(0.0, sign * g.x(j) * dkappa) * E(j);
        }
        // dA/dk phi = -2k phi plus the two corner terms
        VectorXcd dA_phi = -2.0 * k * phi;
        dA_phi(0) += dcorner * phi(0);
        dA_phi(n - 1) += dcorner * phi(n - 1);
        const VectorXcd rhs = V.values.cast<Complex>().cwiseProduct(dE) - dA_phi;
        const VectorXcd dphi = R.solve(rhs);
        return VectorXcd(dE - dphi);
    };
    return {channel(s.phi_plus, +1.0), channel(s.phi_minus, -1.0)};
}

GradientField golden_rule_gradient(const PotentialField& V, const DesignParams& params) {
    return golden_rule_gradient(V, params, golden_rule_rate(V, params));
}

GradientField golden_rule_gradient(const PotentialField& V, const DesignParams& params, const FgrResult& fgr) {
    const Grid& g = V.grid;
    const double h = g.h;
    const double k = fgr.k_res;
    const BoundState& bs = fgr.bound_state;
    const ScatteringState& s = fgr.scattering;
    const VectorXd& psi = bs.psi;
    const VectorXd beta_psi = fgr.beta.cwiseProduct(psi);
    const Complex cp = std::conj(fgr.m_plus);
    const Complex cm = std::conj(fgr.m_minus);

    // Re sum conj(m) e, shared by the bound-state and beta = V terms.
    const VectorXd weighted_e = (cp * s.e_plus + cm * s.e_minus).real();

    // Bound-state variation: -(1/8k) psi R_lambda P_c [beta Re sum conj(m) e].
    const VectorXd u = reduced_resolvent_at_eigenvalue(V, bs, fgr.beta.cwiseProduct(weighted_e));
    VectorXd grad = -(1.0 / (8.0 * k)) * psi.cwiseProduct(u);

    // Distorted-wave variation at fixed k: -(1/8k) Re sum conj(m) e R[beta psi].
    const OutgoingResolvent R(V, k);
    VectorXd w = VectorXd::Constant(g.n, h);
    w(0) = w(g.n - 1) = 0.5 * h;
    const VectorXcd adj = R.solve(w.cwiseProduct(beta_psi).cast<Complex>()) / h;
    grad -= (1.0 / (8.0 * k)) * (cp * s.e_plus + cm * s.e_minus).cwiseProduct(adj).real();

    // Wavenumber variation through k = sqrt(lambda + mu).
    const auto [de_plus, de_minus] = plane_wave_k_derivative(V, s);
    const Complex dm_plus = trapezoid(beta_psi.cast<Complex>().cwiseProduct(de_plus), h);
    const Complex dm_minus = trapezoid(beta_psi.cast<Complex>().cwiseProduct(de_minus), h);
    const double dgamma_dk = -fgr.gamma / k + (1.0 / (8.0 * k)) * (cp * dm_plus + cm * dm_minus).real();
    grad += dgamma_dk * psi.array().square().matrix() / (2.0 * k);

    if (params.beta_mode == BetaMode::EqualsV) grad += (1.0 / (8.0 * k)) * psi.cwiseProduct(weighted_e);

    return {g, masked(std::move(grad), g, V.support_halfwidth), V.support_halfwidth};
}

GradientField wronskian_gradient(const PotentialField& V) { return wronskian_gradient(V, wronskian_at_zero(V)); }

GradientField wronskian_gradient(const PotentialField& V, const WronskianResult& w) {
    return {V.grid, masked(-w.eta_plus.cwiseProduct(w.eta_minus), V.grid, V.support_halfwidth),
            V.support_halfwidth};
}

std::uint64_t content_hash(const PotentialField& V) {
    std::uint64_t hash = 1469598103934665603ull;
    auto mix = [&](const void* data, std::size_t bytes) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < bytes; ++i) {
            hash ^= p[i];
            hash *= 1099511628211ull;
        }
    };
    mix(&V.grid.x_min, sizeof(double));
    mix(&V.grid.x_max, sizeof(double));
    mix(&V.grid.n, sizeof(Index));
    mix(&V.support_halfwidth, sizeof(double));
    mix(V.values.data(), sizeof(double) * static_cast<std::size_t>(V.values.size()));
    return hash;
}

std::uint64_t FgrCache::key(const PotentialField& V, const DesignParams& params) const {
    std::uint64_t k = content_hash(V);
    k ^= std::hash<double>{}(params.mu) + 0x9e3779b97f4a7c15ull + (k << 6) + (k >> 2);
    k ^= static_cast<std::uint64_t>(params.beta_mode == BetaMode::EqualsV) + (k << 6) + (k >> 2);
    if (params.beta) k ^= content_hash(*params.beta) + (k << 6) + (k >> 2);
    return k;
}

std::shared_ptr<const FgrResult> FgrCache::evaluate(const PotentialField& V, const DesignParams& params) {
    const std::uint64_t k = key(V, params);
    {
        std::shared_lock lock(mutex_);
        if (value_ && key_ == k) return value_;
    }
    auto fresh = std::make_shared<const FgrResult>(golden_rule_rate(V, params));
    std::unique_lock lock(mutex_);
    key_ = k;
    value_ = fresh;
    ++misses_;
    return fresh;
}

} // namespace pdp
