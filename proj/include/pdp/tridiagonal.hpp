#pragma once

#include "pdp/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <vector>

namespace pdp {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Tridiagonal matrix stored by diagonals: lower(i) = A(i+1, i), upper(i) = A(i, i+1).
template <typename Scalar>
struct Tridiagonal {
    VectorX<Scalar> lower;
    VectorX<Scalar> diag;
    VectorX<Scalar> upper;

    Eigen::Index size() const { return diag.size(); }

    template <typename Derived>
    auto apply(const Eigen::MatrixBase<Derived>& x) const {
        using Out = decltype(Scalar() * typename Derived::Scalar());
        const Eigen::Index n = size();
        VectorX<Out> y(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            Out s = diag(i) * x(i);
            if (i > 0) s += lower(i - 1) * x(i - 1);
            if (i + 1 < n) s += upper(i) * x(i + 1);
            y(i) = s;
        }
        return y;
    }
};

/// LU factorization with partial pivoting of a general tridiagonal matrix
/// (the gttrf/gttrs scheme). Works for real and complex scalars.
template <typename Scalar>
class TridiagonalLU {
public:
    TridiagonalLU() = default;
    explicit TridiagonalLU(const Tridiagonal<Scalar>& a) { compute(a); }

    void compute(const Tridiagonal<Scalar>& a) {
        const Eigen::Index n = a.size();
        if (n < 1 || a.lower.size() != n - 1 || a.upper.size() != n - 1)
            throw std::invalid_argument("inconsistent tridiagonal dimensions");
        dl_ = a.lower;
        d_ = a.diag;
        du_ = a.upper;
        du2_ = VectorX<Scalar>::Zero(std::max<Eigen::Index>(n - 2, 0));
        pivot_.assign(static_cast<std::size_t>(std::max<Eigen::Index>(n - 1, 0)), false);
        for (Eigen::Index i = 0; i + 1 < n; ++i) {
            if (std::abs(d_(i)) >= std::abs(dl_(i))) {
                if (d_(i) != Scalar(0)) {
                    const Scalar fact = dl_(i) / d_(i);
                    dl_(i) = fact;
                    d_(i + 1) -= fact * du_(i);
                }
            } else {
                const Scalar fact = d_(i) / dl_(i);
                d_(i) = dl_(i);
                dl_(i) = fact;
                const Scalar temp = du_(i);
                du_(i) = d_(i + 1);
                d_(i + 1) = temp - fact * d_(i + 1);
                if (i + 2 < n) {
                    du2_(i) = du_(i + 1);
                    du_(i + 1) = -fact * du_(i + 1);
                }
                pivot_[static_cast<std::size_t>(i)] = true;
            }
        }
        double scale = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) scale = std::max(scale, std::abs(a.diag(i)));
        for (Eigen::Index i = 0; i + 1 < n; ++i)
            scale = std::max({scale, std::abs(a.lower(i)), std::abs(a.upper(i))});
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!(std::abs(d_(i)) > scale * std::numeric_limits<double>::epsilon() * 1e-3))
                throw SolverFailure("tridiagonal system is singular to working precision");
        }
    }

    template <typename Derived>
    VectorX<Scalar> solve(const Eigen::MatrixBase<Derived>& rhs) const {
        const Eigen::Index n = d_.size();
        if (rhs.size() != n) throw std::invalid_argument("right-hand side has wrong length");
        VectorX<Scalar> b = rhs.template cast<Scalar>();
        for (Eigen::Index i = 0; i + 1 < n; ++i) {
            if (!pivot_[static_cast<std::size_t>(i)]) {
                b(i + 1) -= dl_(i) * b(i);
            } else {
                const Scalar temp = b(i);
                b(i) = b(i + 1);
                b(i + 1) = temp - dl_(i) * b(i);
            }
        }
        b(n - 1) /= d_(n - 1);
        if (n > 1) b(n - 2) = (b(n - 2) - du_(n - 2) * b(n - 1)) / d_(n - 2);
        for (Eigen::Index i = n - 3; i >= 0; --i)
            b(i) = (b(i) - du_(i) * b(i + 1) - du2_(i) * b(i + 2)) / d_(i);
        return b;
    }

private:
    VectorX<Scalar> dl_, d_, du_, du2_;
    std::vector<bool> pivot_;
};

/// Number of eigenvalues strictly below `shift` of the real symmetric
/// tridiagonal matrix (diag, offdiag), by the Sturm sequence / LDL^T inertia.
inline Eigen::Index count_eigenvalues_below(const Eigen::VectorXd& diag, const Eigen::VectorXd& offdiag,
                                            double shift) {
    const Eigen::Index n = diag.size();
    const double tiny = std::numeric_limits<double>::min() * 1e3;
    Eigen::Index count = 0;
    double q = 1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double e2 = i > 0 ? offdiag(i - 1) * offdiag(i - 1) : 0.0;
        q = diag(i) - shift - (i > 0 ? e2 / q : 0.0);
        if (q == 0.0) q = -tiny;
        if (q < 0.0) ++count;
    }
    return count;
}

} // namespace pdp
