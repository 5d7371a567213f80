#pragma once

#include <Eigen/Dense>

#include <optional>

namespace pdp {

using Eigen::Index;
using Eigen::VectorXd;
using Eigen::VectorXcd;

/// Uniform grid x_j = x_min + j*h, j = 0..n-1.
struct Grid {
    double x_min = 0.0;
    double x_max = 0.0;
    Index n = 0;
    double h = 0.0;

    double x(Index j) const { return x_min + static_cast<double>(j) * h; }
    VectorXd nodes() const;
    bool symmetric() const;
    /// Index of the node mirrored through x = 0 (symmetric grids only).
    Index mirror(Index j) const { return n - 1 - j; }

    friend bool operator==(const Grid&, const Grid&) = default;
};

/// Rejects n < 3 and x_max <= x_min.
Grid make_grid(double x_min, double x_max, Index n);

/// True when |x| lies in the closed interval [-a, a], with a few ulps of
/// slack so nodes that land on +-a by construction are kept.
bool in_support(double x, double a);

/// 1 on nodes inside [-a, a], 0 elsewhere.
VectorXd support_mask(const Grid& grid, double a);

/// Sampled potential with compact support [-a, a] strictly inside the grid.
struct PotentialField {
    Grid grid;
    VectorXd values;
    double support_halfwidth = 0.0;

    /// Validates length, a < x_max and zero values outside the support.
    PotentialField(Grid g, VectorXd v, double a);

    Index size() const { return grid.n; }
    bool is_symmetric(double tol = 0.0) const;
};

/// Truncates `values` to [-a, a] (hard indicator cut) before validating.
PotentialField truncated(const Grid& grid, VectorXd values, double a);

/// -A sech(B x) on |x| <= a, zero outside.
PotentialField sech_well(double depth, double inverse_length, double a, const Grid& grid);

/// `height` on |x| <= halfwidth, zero outside. Used for the forcing profile beta.
PotentialField indicator(double halfwidth, double height, const Grid& grid);

/// Discrete H^1 norm squared: trapezoid of V^2 + V'^2, V' by centered
/// differences inside and one-sided at the two ends.
double h1_norm_sq(const PotentialField& V);

/// Exact derivative of h1_norm_sq with respect to the nodal values, divided by
/// the node weight h (so that d h1 = sum_j h * g_j * dV_j).
VectorXd h1_norm_sq_gradient(const PotentialField& V);

/// Linear interpolation onto another grid; points outside the source grid get 0.
PotentialField resample(const PotentialField& V, const Grid& target);

/// Trapezoid rule on a uniform grid.
template <typename Derived>
typename Derived::Scalar trapezoid(const Eigen::MatrixBase<Derived>& f, double h) {
    const Index n = f.size();
    if (n == 0) return typename Derived::Scalar(0);
    if (n == 1) return typename Derived::Scalar(0);
    return h * (f.sum() - 0.5 * (f(0) + f(n - 1)));
}

enum class BetaMode { Fixed, EqualsV };

/// Constraint and forcing parameters of the design problem.
struct DesignParams {
    double a = 0.0;       ///< support halfwidth
    double b = 1.0e3;     ///< H^1 bound
    double mu = 0.0;      ///< forcing frequency
    double delta = 1.0e-4;///< Wronskian relaxation, W(0)^2 >= delta
    double wronskian_tol = 1.0e-8; ///< accepted Wronskian variance, relative to 1 + W^2
    BetaMode beta_mode = BetaMode::Fixed;
    std::optional<PotentialField> beta; ///< required when beta_mode == Fixed

    /// Throws std::invalid_argument on a, b, mu, delta, wronskian_tol <= 0 or a
    /// missing beta.
    void validate() const;
    /// The forcing profile evaluated for potential V.
    VectorXd beta_values(const PotentialField& V) const;
};

} // namespace pdp
