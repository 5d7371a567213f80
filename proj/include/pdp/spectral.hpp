#pragma once

#include "pdp/grid.hpp"
#include "pdp/tridiagonal.hpp"

#include <complex>
#include <span>
#include <vector>

namespace pdp {

using Complex = std::complex<double>;

/// Ground state of H_V = -d^2/dx^2 + V on the grid, with Dirichlet ghost
/// nodes one spacing beyond each end.
struct BoundState {
    double lambda = 0.0;
    VectorXd psi;               ///< trapezoid-normalized, positive at its largest |psi|
    Index count_negative = 0;   ///< bound states of the discrete H_V on the whole line (flat exterior closure)
};

/// Distorted plane waves e_{+-} = E_{+-} - phi_{+-} at wavenumber k.
///
/// E_{+-}(x) = exp(+-i kappa x) is the discrete plane wave: kappa solves the
/// three-point dispersion relation (2 - 2 cos(kappa h)) / h^2 = k^2, so E is an
/// exact solution of the free difference equation and the exterior of e_{+-}
/// is exactly a combination of E_+ and E_-. kappa -> k as h -> 0.
struct ScatteringState {
    double k = 0.0;
    double kappa = 0.0;
    VectorXcd e_plus, e_minus;
    VectorXcd phi_plus, phi_minus;
    Complex t{0.0, 0.0};
    Complex r{0.0, 0.0};

    double unitarity_defect() const { return std::norm(r) + std::norm(t) - 1.0; }
};

/// Zero-energy half-bound states eta_{+-} and their Wronskian.
struct WronskianResult {
    double w0 = 0.0;       ///< node-averaged Wronskian eta_+' eta_- - eta_+ eta_-'
    double variance = 0.0; ///< variance of the Wronskian over nodes
    VectorXd eta_plus, eta_minus;
    VectorXd deta_plus, deta_minus;
    bool valid = false;    ///< variance <= tol * (1 + w0^2)
};

struct TransmissionSample {
    double k = 0.0;
    Complex t{0.0, 0.0};
    Complex r{0.0, 0.0};
    double transmission_sq() const { return std::norm(t); }
};

/// Symmetric tridiagonal matrix of H_V with Dirichlet ghost nodes.
Tridiagonal<double> hamiltonian_matrix(const PotentialField& V);

/// (H u)_j = (-u_{j-1} + 2u_j - u_{j+1}) / h^2 + V_j u_j, with u = 0 one node
/// beyond either end of the grid.
VectorXcd hamiltonian_apply(const PotentialField& V, const VectorXcd& u);
VectorXd hamiltonian_apply(const PotentialField& V, const VectorXd& u);

/// Lowest eigenpair by Sturm bisection and inverse iteration. Throws
/// NoBoundState when the discrete H_V has no negative eigenvalue; more than one
/// is reported through count_negative, not as an error.
BoundState solve_ground_state(const PotentialField& V);

/// Discrete wavenumber for energy k^2 on spacing h; requires 0 < k h < 2.
double discrete_wavenumber(double k, double h);

/// Matrix of H_V - k^2 closed with the exact discrete outgoing condition
/// u_{-1} = exp(i kappa h) u_0 and u_n = exp(i kappa h) u_{n-1}. The matrix is
/// complex symmetric.
Tridiagonal<Complex> outgoing_matrix(const PotentialField& V, double k);

/// Solves (H_V - k^2) u = f with outgoing radiation rows at both ends.
VectorXcd outgoing_resolvent_solve(const PotentialField& V, double k, const VectorXcd& f);

/// Reusable factorization of the outgoing operator at a fixed (V, k).
class OutgoingResolvent {
public:
    OutgoingResolvent(const PotentialField& V, double k);
    VectorXcd solve(const VectorXcd& f) const { return lu_.solve(f); }
    double k() const { return k_; }
    double kappa() const { return kappa_; }

private:
    double k_;
    double kappa_;
    TridiagonalLU<Complex> lu_;
};

/// Solves (H_V - lambda) u = P_c f with <psi, u> = 0, P_c f = f - <psi, f> psi,
/// through the bordered system [[H - lambda, psi], [w psi^T, 0]].
VectorXd reduced_resolvent_at_eigenvalue(const PotentialField& V, const BoundState& bs, const VectorXd& f);

/// Distorted plane waves, transmission and reflection at wavenumber k > 0.
/// t and r are read off the five outermost nodes on each side.
ScatteringState distorted_plane_waves(const PotentialField& V, double k);

/// Transmission and reflection for every k in `ks`.
std::vector<TransmissionSample> transmission_sweep(const PotentialField& V, std::span<const double> ks);

/// eta_+ marched from x_max (eta = 1, eta' = 0), eta_- from x_min, each by the
/// implicit midpoint (Crank-Nicolson) scheme on (eta, eta').
WronskianResult wronskian_at_zero(const PotentialField& V, double variance_tol = 1e-8);

/// Lower bound exp(-min(1/k, 2a) * int |V|) on |t(k)|.
double transmission_lower_bound(const PotentialField& V, double k);

} // namespace pdp
