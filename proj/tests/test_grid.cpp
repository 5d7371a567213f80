#include "pdp/grid.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace pdp;

TEST_SUITE("grid") {

TEST_CASE("grid spacing and nodes") {
    CHECK(make_grid(-60.0, 60.0, 3001).h == doctest::Approx(0.04).epsilon(1e-14));
    CHECK_THROWS_AS(make_grid(-12.0, 12.0, 2), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(1.0, 1.0, 11), std::invalid_argument);
    const Grid g = make_grid(0.0, 1.0, 11);
    const VectorXd x = g.nodes();
    for (Index j = 0; j < 11; ++j) CHECK(x(j) == doctest::Approx(0.1 * j).epsilon(1e-15));
    CHECK(make_grid(-3.0, 3.0, 61).symmetric());
    CHECK_FALSE(make_grid(-3.0, 4.0, 61).symmetric());
}

TEST_CASE("sech well values and support") {
    const Grid g = make_grid(-20.0, 20.0, 2001);
    const PotentialField V = sech_well(1.0, 1.0, 10.0, g);
    CHECK(V.values(1000) == doctest::Approx(-1.0));
    for (Index j = 0; j < g.n; ++j) {
        if (std::abs(g.x(j)) > 10.0 + 1e-12) CHECK(V.values(j) == 0.0);
        else CHECK(V.values(j) == doctest::Approx(-1.0 / std::cosh(g.x(j))));
    }
    CHECK(V.is_symmetric(1e-13));

    // int |2 sech x| over [-10, 10] = 4 atan(sinh 10)
    const PotentialField W = sech_well(2.0, 1.0, 10.0, g);
    const double l1 = trapezoid(W.values.cwiseAbs(), g.h);
    CHECK(l1 == doctest::Approx(4.0 * std::atan(std::sinh(10.0))).epsilon(1e-3));
}

TEST_CASE("potential field rejects values outside the support") {
    const Grid g = make_grid(-5.0, 5.0, 101);
    VectorXd v = VectorXd::Ones(g.n);
    CHECK_THROWS_AS(PotentialField(g, v, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(PotentialField(g, VectorXd::Zero(g.n), 5.0), std::invalid_argument);
    CHECK_THROWS_AS(PotentialField(g, VectorXd::Zero(10), 2.0), std::invalid_argument);
    CHECK_NOTHROW(truncated(g, v, 2.0));
}

TEST_CASE("H1 norm") {
    const Grid g = make_grid(-4.0, 4.0, 801);
    CHECK(h1_norm_sq(PotentialField(g, VectorXd::Zero(g.n), 2.0)) == 0.0);

    // sin(pi x) on [-1, 1]: int sin^2 + pi^2 cos^2 = 1 + pi^2. V' jumps at +-1,
    // so the centred difference there only converges at first order.
    auto sine_error = [](Index n) {
        const Grid g = make_grid(-4.0, 4.0, n);
        VectorXd v(g.n);
        for (Index j = 0; j < g.n; ++j) v(j) = std::abs(g.x(j)) <= 1.0 ? std::sin(M_PI * g.x(j)) : 0.0;
        return std::abs(h1_norm_sq(PotentialField(g, v, 1.0)) - (1.0 + M_PI * M_PI));
    };
    const double e1 = sine_error(401), e2 = sine_error(801);
    CHECK(e2 < 0.1);
    CHECK(std::log2(e1 / e2) > 0.9);

    // a plateau of height c on [-1, 1] with linear ramps: at least c^2 * 2
    VectorXd p(g.n);
    for (Index j = 0; j < g.n; ++j) p(j) = 3.0 * std::clamp(1.5 - std::abs(g.x(j)), 0.0, 0.5) * 2.0;
    CHECK(h1_norm_sq(PotentialField(g, p, 1.5)) >= 9.0 * 2.0);
}

TEST_CASE("H1 gradient matches central differences") {
    const Grid g = make_grid(-3.0, 3.0, 121);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n01;
    VectorXd v = VectorXd::Zero(g.n), w = VectorXd::Zero(g.n);
    for (Index j = 0; j < g.n; ++j)
        if (std::abs(g.x(j)) <= 2.0) {
            v(j) = n01(rng);
            w(j) = n01(rng);
        }
    const PotentialField V(g, v, 2.0);
    const VectorXd grad = h1_norm_sq_gradient(V);
    const double eps = 1e-5;
    const double fd = (h1_norm_sq(PotentialField(g, v + eps * w, 2.0)) - h1_norm_sq(PotentialField(g, v - eps * w, 2.0))) /
                      (2.0 * eps);
    CHECK(g.h * grad.dot(w) == doctest::Approx(fd).epsilon(1e-7));
}

TEST_CASE("resample reproduces linear data") {
    const Grid a = make_grid(-10.0, 10.0, 201);
    const Grid b = make_grid(-12.0, 12.0, 1001);
    VectorXd v(a.n);
    for (Index j = 0; j < a.n; ++j) v(j) = std::abs(a.x(j)) <= 4.0 ? 4.0 - std::abs(a.x(j)) : 0.0;
    const PotentialField r = resample(PotentialField(a, v, 4.0), b);
    for (Index j = 0; j < b.n; ++j) CHECK(r.values(j) == doctest::Approx(std::max(0.0, 4.0 - std::abs(b.x(j)))));
}

TEST_CASE("trapezoid integrates exactly linear functions") {
    const Grid g = make_grid(0.0, 2.0, 7);
    CHECK(trapezoid(g.nodes(), g.h) == doctest::Approx(2.0));
}

}
