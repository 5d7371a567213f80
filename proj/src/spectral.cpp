#include "pdp/spectral.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pdp {

namespace {

constexpr int kEdgeNodes = 5;

template <typename Vec>
Vec apply_dirichlet(const PotentialField& V, const Vec& u) {
    const Index n = V.grid.n;
    if (u.size() != n) throw std::invalid_argument("vector length does not match the grid");
    const double ih2 = 1.0 / (V.grid.h * V.grid.h);
    Vec out(n);
    for (Index j = 0; j < n; ++j) {
        auto left = j > 0 ? u(j - 1) : typename Vec::Scalar(0);
        auto right = j + 1 < n ? u(j + 1) : typename Vec::Scalar(0);
        out(j) = (-left + 2.0 * u(j) - right) * ih2 + V.values(j) * u(j);
    }
    return out;
}

} // namespace

Tridiagonal<double> hamiltonian_matrix(const PotentialField& V) {
    const Index n = V.grid.n;
    const double ih2 = 1.0 / (V.grid.h * V.grid.h);
    Tridiagonal<double> t;
    t.diag = V.values.array() + 2.0 * ih2;
    t.lower = VectorXd::Constant(n - 1, -ih2);
    t.upper = t.lower;
    return t;
}

VectorXcd hamiltonian_apply(const PotentialField& V, const VectorXcd& u) { return apply_dirichlet(V, u); }
VectorXd hamiltonian_apply(const PotentialField& V, const VectorXd& u) { return apply_dirichlet(V, u); }

BoundState solve_ground_state(const PotentialField& V) {
    const Tridiagonal<double> H = hamiltonian_matrix(V);
    const Index n = H.size();
    BoundState bs;
    // Counted with flat (zero-energy) exterior closure, which is the bound-state
    // count of the operator on the whole line when V vanishes near both ends.
    VectorXd open_diag = H.diag;
    open_diag(0) -= -H.lower(0);
    open_diag(n - 1) -= -H.lower(0);
    bs.count_negative = count_eigenvalues_below(open_diag, H.lower, 0.0);
    if (count_eigenvalues_below(H.diag, H.lower, 0.0) == 0) throw NoBoundState();

    // Gershgorin lower bound, then bisection on the Sturm count.
    double lo = H.diag.minCoeff() - 2.0 * std::abs(H.lower(0));
    double hi = 0.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (count_eigenvalues_below(H.diag, H.lower, mid) >= 1)
            hi = mid;
        else
            lo = mid;
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(lo), std::abs(hi)))
            break;
    }
    const double lambda0 = 0.5 * (lo + hi);

    // Inverse iteration with a shift just below the eigenvalue.
    Tridiagonal<double> shifted = H;
    const double shift = lambda0 - 1e-9 * std::max(1.0, std::abs(lambda0));
    shifted.diag.array() -= shift;
    const TridiagonalLU<double> lu(shifted);
    VectorXd x = VectorXd::Ones(n);
    for (int it = 0; it < 4; ++it) {
        x = lu.solve(x);
        x /= x.norm();
    }
    const VectorXd Hx = H.apply(x);
    bs.lambda = x.dot(Hx) / x.dot(x);
    if (!std::isfinite(bs.lambda)) throw SolverFailure("ground state iteration produced non-finite values");

    Index imax = 0;
    x.cwiseAbs().maxCoeff(&imax);
    if (x(imax) < 0.0) x = -x;
    const double norm2 = trapezoid(x.array().square().matrix(), V.grid.h);
    bs.psi = x / std::sqrt(norm2);
    return bs;
}

double discrete_wavenumber(double k, double h) {
    if (!(k > 0.0)) throw std::invalid_argument("wavenumber must be positive");
    const double s = 0.5 * k * h;
    if (!(s < 1.0)) throw std::invalid_argument("wavenumber is not resolved by the grid (k h >= 2)");
    return 2.0 / h * std::asin(s);
}

Tridiagonal<Complex> outgoing_matrix(const PotentialField& V, double k) {
    const Index n = V.grid.n;
    const double h = V.grid.h;
    const double ih2 = 1.0 / (h * h);
    const double kappa = discrete_wavenumber(k, h);
    const Complex out = std::exp(Complex(0.0, kappa * h));
    Tridiagonal<Complex> a;
    a.diag = (V.values.array() + 2.0 * ih2 - k * k).cast<Complex>();
    a.diag(0) -= out * ih2;
    a.diag(n - 1) -= out * ih2;
    a.lower = VectorXcd::Constant(n - 1, Complex(-ih2, 0.0));
    a.upper = a.lower;
    return a;
}

OutgoingResolvent::OutgoingResolvent(const PotentialField& V, double k)
    : k_(k), kappa_(discrete_wavenumber(k, V.grid.h)), lu_(outgoing_matrix(V, k)) {}

VectorXcd outgoing_resolvent_solve(const PotentialField& V, double k, const VectorXcd& f) {
    if (f.size() != V.grid.n) throw std::invalid_argument("forcing length does not match the grid");
    return OutgoingResolvent(V, k).solve(f);
}

VectorXd reduced_resolvent_at_eigenvalue(const PotentialField& V, const BoundState& bs, const VectorXd& f) {
    const Index n = V.grid.n;
    if (f.size() != n || bs.psi.size() != n) throw std::invalid_argument("vector length does not match the grid");
    const double h = V.grid.h;
    const VectorXd& psi = bs.psi;
    const double proj = trapezoid(psi.cwiseProduct(f), h);
    const VectorXd rhs_c = f - proj * psi;

    const Tridiagonal<double> H = hamiltonian_matrix(V);
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(static_cast<std::size_t>(5 * n + 1));
    for (Index j = 0; j < n; ++j) {
        entries.emplace_back(j, j, H.diag(j) - bs.lambda);
        if (j + 1 < n) {
            entries.emplace_back(j + 1, j, H.lower(j));
            entries.emplace_back(j, j + 1, H.upper(j));
        }
        const double w = (j == 0 || j == n - 1) ? 0.5 * h : h;
        entries.emplace_back(j, n, psi(j));
        entries.emplace_back(n, j, w * psi(j));
    }
    Eigen::SparseMatrix<double> A(n + 1, n + 1);
    A.setFromTriplets(entries.begin(), entries.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) throw SolverFailure("bordered reduced-resolvent system is singular");
    VectorXd rhs(n + 1);
    rhs.head(n) = rhs_c;
    rhs(n) = 0.0;
    const VectorXd sol = lu.solve(rhs);
    if (lu.info() != Eigen::Success || !sol.allFinite())
        throw SolverFailure("bordered reduced-resolvent solve failed");
    return sol.head(n);
}

namespace {

VectorXcd plane_wave(const Grid& g, double kappa, double sign) {
    VectorXcd e(g.n);
    for (Index j = 0; j < g.n; ++j) e(j) = std::exp(Complex(0.0, sign * kappa * g.x(j)));
    return e;
}

struct EdgeRange {
    Index left_count;
    Index right_count;
};

EdgeRange exterior_nodes(const PotentialField& V) {
    const Grid& g = V.grid;
    const double a = V.support_halfwidth;
    Index left = 0, right = 0;
    while (left < kEdgeNodes && left < g.n && !in_support(g.x(left), a) && g.x(left) < 0.0) ++left;
    while (right < kEdgeNodes && right < g.n && !in_support(g.x(g.n - 1 - right), a) && g.x(g.n - 1 - right) > 0.0)
        ++right;
    if (left == 0 || right == 0) throw std::invalid_argument("grid has no nodes outside the support");
    return {left, right};
}

} // namespace

ScatteringState distorted_plane_waves(const PotentialField& V, double k) {
    const Grid& g = V.grid;
    const OutgoingResolvent R(V, k);
    ScatteringState s;
    s.k = k;
    s.kappa = R.kappa();
    const VectorXcd Ep = plane_wave(g, s.kappa, +1.0);
    const VectorXcd Em = plane_wave(g, s.kappa, -1.0);
    s.phi_plus = R.solve(V.values.cast<Complex>().cwiseProduct(Ep));
    s.phi_minus = R.solve(V.values.cast<Complex>().cwiseProduct(Em));
    s.e_plus = Ep - s.phi_plus;
    s.e_minus = Em - s.phi_minus;
    if (!s.e_plus.allFinite() || !s.e_minus.allFinite())
        throw SolverFailure("outgoing resolvent produced non-finite values");

    const EdgeRange edge = exterior_nodes(V);
    Complex t(0.0, 0.0), r(0.0, 0.0);
    for (Index i = 0; i < edge.right_count; ++i) {
        const Index j = g.n - 1 - i;
        t += s.e_plus(j) * std::conj(Ep(j));
    }
    for (Index j = 0; j < edge.left_count; ++j) r += (s.e_plus(j) - Ep(j)) * Ep(j);
    s.t = t / static_cast<double>(edge.right_count);
    s.r = r / static_cast<double>(edge.left_count);
    return s;
}

std::vector<TransmissionSample> transmission_sweep(const PotentialField& V, std::span<const double> ks) {
    std::vector<TransmissionSample> out;
    out.reserve(ks.size());
    for (double k : ks) {
        const ScatteringState s = distorted_plane_waves(V, k);
        out.push_back({k, s.t, s.r});
    }
    return out;
}

namespace {

// One implicit-midpoint step of y' = [[0, 1], [v, 0]] y with signed step s.
inline void midpoint_step(double& y, double& dy, double v, double s) {
    const double c = 0.5 * s;
    // (I - cM) y_new = (I + cM) y_old
    const double r0 = y + c * dy;
    const double r1 = dy + c * v * y;
    const double det = 1.0 - c * c * v;
    y = (r0 + c * r1) / det;
    dy = (r1 + c * v * r0) / det;
}

} // namespace

WronskianResult wronskian_at_zero(const PotentialField& V, double variance_tol) {
    const Grid& g = V.grid;
    const Index n = g.n;
    const double h = g.h;
    WronskianResult w;
    w.eta_plus.resize(n);
    w.deta_plus.resize(n);
    w.eta_minus.resize(n);
    w.deta_minus.resize(n);

    double y = 1.0, dy = 0.0;
    w.eta_plus(n - 1) = y;
    w.deta_plus(n - 1) = dy;
    for (Index j = n - 1; j > 0; --j) {
        midpoint_step(y, dy, 0.5 * (V.values(j) + V.values(j - 1)), -h);
        w.eta_plus(j - 1) = y;
        w.deta_plus(j - 1) = dy;
    }
    y = 1.0;
    dy = 0.0;
    w.eta_minus(0) = y;
    w.deta_minus(0) = dy;
    for (Index j = 0; j + 1 < n; ++j) {
        midpoint_step(y, dy, 0.5 * (V.values(j) + V.values(j + 1)), h);
        w.eta_minus(j + 1) = y;
        w.deta_minus(j + 1) = dy;
    }
    const VectorXd wr = w.deta_plus.cwiseProduct(w.eta_minus) - w.eta_plus.cwiseProduct(w.deta_minus);
    if (!wr.allFinite()) throw SolverFailure("half-bound-state integration overflowed");
    w.w0 = wr.mean();
    w.variance = (wr.array() - w.w0).square().mean();
    // The variance is quadratic in W, so the tolerance scales with 1 + W^2.
    w.valid = w.variance <= variance_tol * (1.0 + w.w0 * w.w0);
    return w;
}

double transmission_lower_bound(const PotentialField& V, double k) {
    const double l1 = trapezoid(V.values.cwiseAbs(), V.grid.h);
    return std::exp(-std::min(1.0 / std::abs(k), 2.0 * V.support_halfwidth) * l1);
}

} // namespace pdp
