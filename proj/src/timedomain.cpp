#include "pdp/timedomain.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace pdp {

void SimConfig::validate(double support_halfwidth, double fastest_rate) const {
    if (!(t_final > 0.0) || !(dt_max > 0.0) || !(record_interval > 0.0))
        throw std::invalid_argument("t_final, dt_max and record_interval must be positive");
    if (!(epsilon >= 0.0) || !(mu > 0.0)) throw std::invalid_argument("need epsilon >= 0 and mu > 0");
    if (!(dt_max * std::max(fastest_rate, mu) < 0.5))
        throw std::invalid_argument("dt_max does not resolve the fastest retained frequency");
    if (absorber.width < 0.0 || absorber.strength < 0.0) throw std::invalid_argument("absorber must be nonnegative");
    const double inner = std::min(-domain.x_min, domain.x_max) - absorber.width;
    if (absorber.strength > 0.0 && !(inner > support_halfwidth))
        throw std::invalid_argument("absorbing layer overlaps the support of V or beta");
}

VectorXd absorber_profile(const Grid& g, const Absorber& abs) {
    VectorXd sigma = VectorXd::Zero(g.n);
    if (abs.width <= 0.0 || abs.strength <= 0.0) return sigma;
    const double left = g.x_min + abs.width;
    const double right = g.x_max - abs.width;
    for (Index j = 0; j < g.n; ++j) {
        const double x = g.x(j);
        double s = 0.0;
        if (x > right) s = (x - right) / abs.width;
        if (x < left) s = (left - x) / abs.width;
        sigma(j) = abs.strength * s * s * s * s;
    }
    return sigma;
}

namespace {

double interior_norm(const VectorXcd& phi, const VectorXd& sigma, double h) {
    double s = 0.0;
    for (Index j = 0; j < phi.size(); ++j)
        if (sigma(j) == 0.0) s += std::norm(phi(j));
    return std::sqrt(s * h);
}

double projection_sq(const VectorXd& psi, const VectorXcd& phi, double h) {
    return std::norm(trapezoid(psi.cast<Complex>().cwiseProduct(phi), h));
}

} // namespace

SimResult propagate(const PotentialField& V, const VectorXd& beta, const VectorXd& psi, const VectorXcd& phi0,
                    const SimConfig& cfg) {
    const Grid& g = cfg.domain;
    if (!(V.grid == g)) throw std::invalid_argument("potential is not sampled on the simulation grid");
    const Index n = g.n;
    if (beta.size() != n || psi.size() != n || phi0.size() != n)
        throw std::invalid_argument("simulation arrays do not match the grid");

    const double h = g.h;
    const double ih2 = 1.0 / (h * h);
    const VectorXd sigma = absorber_profile(g, cfg.absorber);
    const Index steps = std::max<Index>(1, static_cast<Index>(std::ceil(cfg.t_final / cfg.dt_max - 1e-9)));
    const double dt = cfg.t_final / static_cast<double>(steps);
    const Index stride = std::max<Index>(1, static_cast<Index>(std::llround(cfg.record_interval / dt)));
    const Complex half(0.0, 0.5 * dt);

    // Static part of the diagonal of H - i sigma.
    const VectorXcd base = (V.values.array() + 2.0 * ih2).cast<Complex>() - Complex(0.0, 1.0) * sigma.cast<Complex>().array();

    Tridiagonal<Complex> lhs;
    lhs.lower = VectorXcd::Constant(n - 1, -half * ih2);
    lhs.upper = lhs.lower;

    SimResult res;
    VectorXcd phi = phi0;
    VectorXcd rhs(n);
    auto record = [&](double t) {
        res.times.push_back(t);
        res.projection_sq.push_back(projection_sq(psi, phi, h));
        res.norm.push_back(interior_norm(phi, sigma, h));
    };
    record(0.0);
    for (Index s = 0; s < steps; ++s) {
        const double tm = (static_cast<double>(s) + 0.5) * dt;
        const double f = cfg.epsilon * std::cos(cfg.mu * tm);
        const VectorXcd diag = base + (f * beta).cast<Complex>();
        lhs.diag = VectorXcd::Ones(n) + half * diag;
        for (Index j = 0; j < n; ++j) {
            Complex lap = diag(j) * phi(j);
            if (j > 0) lap -= ih2 * phi(j - 1);
            if (j + 1 < n) lap -= ih2 * phi(j + 1);
            rhs(j) = phi(j) - half * lap;
        }
        phi = TridiagonalLU<Complex>(lhs).solve(rhs);
        if (!phi.allFinite()) throw SolverFailure("time integration produced non-finite values");
        if ((s + 1) % stride == 0 || s + 1 == steps) record(static_cast<double>(s + 1) * dt);
    }
    res.final_state = std::move(phi);
    return res;
}

SimResult propagate_bound_state(const PotentialField& V, const VectorXd& beta, const SimConfig& cfg) {
    const BoundState bs = solve_ground_state(V);
    return propagate(V, beta, bs.psi, bs.psi.cast<Complex>(), cfg);
}

double fit_decay_rate(const SimResult& result, double t_begin, double t_end) {
    double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
    std::size_t m = 0;
    for (std::size_t i = 0; i < result.times.size(); ++i) {
        const double t = result.times[i];
        if (t < t_begin || t > t_end) continue;
        const double p = result.projection_sq[i];
        if (!(p > 0.0)) throw DomainError("projection is not positive inside the fit window");
        const double y = std::log(p);
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
        ++m;
    }
    if (m < 2) throw std::invalid_argument("fit window holds fewer than two samples");
    const double dm = static_cast<double>(m);
    const double denom = dm * stt - st * st;
    if (!(denom > 0.0)) throw std::invalid_argument("fit window has no time spread");
    return -(dm * sty - st * sy) / denom;
}

SimResult filter_experiment(const PotentialField& V, const VectorXd& beta, const SimConfig& cfg,
                            double noise_amplitude, std::uint64_t seed) {
    if (!(noise_amplitude >= 0.0)) throw std::invalid_argument("noise amplitude must be nonnegative");
    const BoundState bs = solve_ground_state(V);
    const Grid& g = V.grid;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    VectorXcd phi0 = bs.psi.cast<Complex>();
    for (Index j = 0; j < g.n; ++j)
        if (in_support(g.x(j), V.support_halfwidth)) phi0(j) += noise_amplitude * normal(rng);
    const Complex p = trapezoid(bs.psi.cast<Complex>().cwiseProduct(phi0), g.h);
    if (std::abs(p) == 0.0) throw DomainError("noisy data is orthogonal to the bound state");
    phi0 /= p;
    return propagate(V, beta, bs.psi, phi0, cfg);
}

double absorber_reflection(const Grid& g, const Absorber& abs, double k, double dt) {
    const double L = std::min(-g.x_min, g.x_max);
    const double width = 0.1 * (L - abs.width);
    VectorXcd phi(g.n);
    for (Index j = 0; j < g.n; ++j) {
        const double x = g.x(j);
        phi(j) = std::exp(-0.5 * x * x / (width * width)) * std::exp(Complex(0.0, k * x));
    }
    const double initial = trapezoid(phi.cwiseAbs2(), g.h);
    SimConfig cfg;
    cfg.epsilon = 0.0;
    cfg.mu = 1.0;
    cfg.domain = g;
    cfg.absorber = abs;
    cfg.dt_max = dt;
    cfg.t_final = 1.5 * L / (2.0 * k);
    cfg.record_interval = cfg.t_final;
    const PotentialField zero(g, VectorXd::Zero(g.n), 0.5 * g.h);
    const SimResult r = propagate(zero, VectorXd::Zero(g.n), VectorXd::Zero(g.n), phi, cfg);
    const double left = r.norm.back();
    return left * left / initial;
}

} // namespace pdp
