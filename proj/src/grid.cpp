#include "pdp/grid.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace pdp {

Grid make_grid(double x_min, double x_max, Index n) {
    if (n < 3) throw std::invalid_argument("grid needs at least 3 nodes, got " + std::to_string(n));
    if (!(x_max > x_min) || !std::isfinite(x_min) || !std::isfinite(x_max))
        throw std::invalid_argument("grid bounds must be finite and increasing");
    Grid g;
    g.x_min = x_min;
    g.x_max = x_max;
    g.n = n;
    g.h = (x_max - x_min) / static_cast<double>(n - 1);
    return g;
}

VectorXd Grid::nodes() const {
    VectorXd xs(n);
    for (Index j = 0; j < n; ++j) xs(j) = x(j);
    return xs;
}

bool Grid::symmetric() const { return x_min == -x_max; }

bool in_support(double x, double a) {
    return std::abs(x) <= a * (1.0 + 64.0 * std::numeric_limits<double>::epsilon()) + 1e-14;
}

VectorXd support_mask(const Grid& grid, double a) {
    VectorXd m(grid.n);
    for (Index j = 0; j < grid.n; ++j) m(j) = in_support(grid.x(j), a) ? 1.0 : 0.0;
    return m;
}

PotentialField::PotentialField(Grid g, VectorXd v, double a)
    : grid(g), values(std::move(v)), support_halfwidth(a) {
    if (values.size() != grid.n)
        throw std::invalid_argument("potential has " + std::to_string(values.size()) +
                                    " values for a grid of " + std::to_string(grid.n));
    if (!(a > 0.0)) throw std::invalid_argument("support halfwidth must be positive");
    if (!(a < grid.x_max) || !(-a > grid.x_min))
        throw std::invalid_argument("support [-a, a] must lie strictly inside the grid");
    for (Index j = 0; j < grid.n; ++j) {
        if (!std::isfinite(values(j))) throw std::invalid_argument("potential has non-finite values");
        if (!in_support(grid.x(j), a) && values(j) != 0.0)
            throw std::invalid_argument("potential is nonzero outside its support at x = " +
                                        std::to_string(grid.x(j)));
    }
}

bool PotentialField::is_symmetric(double tol) const {
    if (!grid.symmetric()) return false;
    for (Index j = 0; j < grid.n / 2; ++j)
        if (std::abs(values(j) - values(grid.mirror(j))) > tol) return false;
    return true;
}

PotentialField truncated(const Grid& grid, VectorXd values, double a) {
    if (values.size() != grid.n) throw std::invalid_argument("value count does not match grid");
    for (Index j = 0; j < grid.n; ++j)
        if (!in_support(grid.x(j), a)) values(j) = 0.0;
    return PotentialField(grid, std::move(values), a);
}

PotentialField sech_well(double depth, double inverse_length, double a, const Grid& grid) {
    if (!(depth > 0.0) || !(inverse_length > 0.0))
        throw std::invalid_argument("sech well needs positive depth and inverse length");
    VectorXd v(grid.n);
    for (Index j = 0; j < grid.n; ++j) v(j) = -depth / std::cosh(inverse_length * grid.x(j));
    return truncated(grid, std::move(v), a);
}

PotentialField indicator(double halfwidth, double height, const Grid& grid) {
    return truncated(grid, VectorXd::Constant(grid.n, height), halfwidth);
}

namespace {

// First derivative: centered inside, second-order one-sided at the ends.
VectorXd derivative(const VectorXd& v, double h) {
    const Index n = v.size();
    VectorXd d(n);
    d(0) = (-3.0 * v(0) + 4.0 * v(1) - v(2)) / (2.0 * h);
    d(n - 1) = (3.0 * v(n - 1) - 4.0 * v(n - 2) + v(n - 3)) / (2.0 * h);
    for (Index j = 1; j + 1 < n; ++j) d(j) = (v(j + 1) - v(j - 1)) / (2.0 * h);
    return d;
}

// Transpose of `derivative`.
VectorXd derivative_transpose(const VectorXd& u, double h) {
    const Index n = u.size();
    VectorXd r = VectorXd::Zero(n);
    r(0) += -3.0 * u(0) / (2.0 * h);
    r(1) += 4.0 * u(0) / (2.0 * h);
    r(2) += -u(0) / (2.0 * h);
    r(n - 1) += 3.0 * u(n - 1) / (2.0 * h);
    r(n - 2) += -4.0 * u(n - 1) / (2.0 * h);
    r(n - 3) += u(n - 1) / (2.0 * h);
    for (Index j = 1; j + 1 < n; ++j) {
        r(j + 1) += u(j) / (2.0 * h);
        r(j - 1) -= u(j) / (2.0 * h);
    }
    return r;
}

VectorXd trapezoid_weights(Index n, double h) {
    VectorXd w = VectorXd::Constant(n, h);
    w(0) = w(n - 1) = 0.5 * h;
    return w;
}

} // namespace

double h1_norm_sq(const PotentialField& V) {
    const double h = V.grid.h;
    const VectorXd d = derivative(V.values, h);
    return trapezoid(V.values.array().square().matrix(), h) + trapezoid(d.array().square().matrix(), h);
}

VectorXd h1_norm_sq_gradient(const PotentialField& V) {
    const double h = V.grid.h;
    const VectorXd w = trapezoid_weights(V.grid.n, h);
    const VectorXd d = derivative(V.values, h);
    const VectorXd g = 2.0 * w.cwiseProduct(V.values) +
                       2.0 * derivative_transpose(w.cwiseProduct(d), h);
    return g / h;
}

PotentialField resample(const PotentialField& V, const Grid& target) {
    VectorXd out = VectorXd::Zero(target.n);
    const Grid& src = V.grid;
    for (Index j = 0; j < target.n; ++j) {
        const double x = target.x(j);
        if (!in_support(x, V.support_halfwidth)) continue;
        const double s = (x - src.x_min) / src.h;
        const double fl = std::floor(s);
        Index i = static_cast<Index>(fl);
        double frac = s - fl;
        // snap onto nodes that coincide to round-off so same-spacing grids copy exactly
        if (frac < 1e-9) frac = 0.0;
        if (frac > 1.0 - 1e-9) { frac = 0.0; ++i; }
        if (i < 0 || i >= src.n) continue;
        const double left = V.values(i);
        const double right = (i + 1 < src.n) ? V.values(i + 1) : 0.0;
        out(j) = frac == 0.0 ? left : (1.0 - frac) * left + frac * right;
    }
    return truncated(target, std::move(out), V.support_halfwidth);
}

void DesignParams::validate() const {
    if (!(a > 0.0)) throw std::invalid_argument("design parameter a must be positive");
    if (!(b > 0.0)) throw std::invalid_argument("design parameter b must be positive");
    if (!(mu > 0.0)) throw std::invalid_argument("forcing frequency mu must be positive");
    if (!(delta > 0.0)) throw std::invalid_argument("Wronskian relaxation delta must be positive");
    if (!(wronskian_tol > 0.0)) throw std::invalid_argument("Wronskian variance tolerance must be positive");
    if (beta_mode == BetaMode::Fixed && !beta)
        throw std::invalid_argument("fixed beta mode requires a forcing profile");
}

VectorXd DesignParams::beta_values(const PotentialField& V) const {
    if (beta_mode == BetaMode::EqualsV) return V.values;
    if (!beta) throw std::invalid_argument("fixed beta mode requires a forcing profile");
    if (beta->grid != V.grid) throw std::invalid_argument("beta and V live on different grids");
    return beta->values;
}

} // namespace pdp
