#pragma once

#include "pdp/grid.hpp"
#include "pdp/spectral.hpp"

#include <cstdint>
#include <vector>

namespace pdp {

/// Complex absorbing layer -i sigma(x), sigma = strength * s^4 with s the
/// fractional depth into the last `width` of the domain on either side.
struct Absorber {
    double width = 15.0;
    double strength = 2.0;
};

struct SimConfig {
    double epsilon = 1.0;
    double mu = 2.0;
    double t_final = 40.0;
    double dt_max = 0.01;
    double record_interval = 0.1;
    Absorber absorber;
    Grid domain = make_grid(-60.0, 60.0, 3001);

    /// Throws std::invalid_argument when the step cannot resolve the forcing
    /// or the absorber overlaps [-a, a].
    void validate(double support_halfwidth, double fastest_rate) const;
};

struct SimResult {
    std::vector<double> times;
    std::vector<double> projection_sq; ///< |<psi_V, phi(t)>|^2
    std::vector<double> norm;          ///< ||phi(t)|| over the non-absorbing interior
    VectorXcd final_state;
    double fitted_rate = 0.0;
};

/// sigma(x) on the simulation grid.
VectorXd absorber_profile(const Grid& g, const Absorber& abs);

/// Integrates i phi_t = (H_V - i sigma) phi + eps cos(mu t) beta phi by the
/// Crank-Nicolson rule with the forcing frozen at each step midpoint. V and
/// beta must live on cfg.domain; psi is the bound state used for projections.
SimResult propagate(const PotentialField& V, const VectorXd& beta, const VectorXd& psi, const VectorXcd& phi0,
                    const SimConfig& cfg);

/// Same, with psi re-solved on the simulation grid and phi0 = psi.
SimResult propagate_bound_state(const PotentialField& V, const VectorXd& beta, const SimConfig& cfg);

/// Decay rate -d/dt log projection_sq by least squares over [t_begin, t_end].
/// Throws DomainError on non-positive samples in the window.
double fit_decay_rate(const SimResult& result, double t_begin, double t_end);

/// psi + amplitude * N(0,1) per node on [-a, a], rescaled so <psi, phi0> = 1,
/// then propagated. The generator is std::mt19937_64 seeded with `seed`.
SimResult filter_experiment(const PotentialField& V, const VectorXd& beta, const SimConfig& cfg,
                            double noise_amplitude, std::uint64_t seed);

/// Energy fraction reflected by the absorbing layer for a Gaussian packet with
/// carrier wavenumber k launched toward the right edge of a free domain.
double absorber_reflection(const Grid& g, const Absorber& abs, double k, double dt);

} // namespace pdp
