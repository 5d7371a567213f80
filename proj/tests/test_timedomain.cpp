#include "pdp/timedomain.hpp"

#include <doctest.h>

#include <cmath>

using namespace pdp;

namespace {

SimConfig quiet_config() {
    SimConfig c;
    c.epsilon = 0.0;
    c.t_final = 10.0;
    c.domain = make_grid(-40.0, 40.0, 2001);
    c.absorber.width = 10.0;
    return c;
}

struct Setup {
    PotentialField V;
    VectorXd beta;
    BoundState bs;
};

Setup well_on(const Grid& g) {
    const PotentialField V = sech_well(2.0, 2.0, 12.0, g);
    return {V, indicator(2.0, 1.0, g).values, solve_ground_state(V)};
}

} // namespace

TEST_SUITE("timedomain") {

TEST_CASE("absorber profile") {
    const Grid g = make_grid(-40.0, 40.0, 801);
    const VectorXd s = absorber_profile(g, Absorber{10.0, 2.0});
    CHECK(s(0) == doctest::Approx(2.0));
    CHECK(s(g.n - 1) == doctest::Approx(2.0));
    for (Index j = 0; j < g.n; ++j) {
        CHECK(s(j) >= 0.0);
        if (std::abs(g.x(j)) <= 30.0) CHECK(s(j) == 0.0);
    }
}

TEST_CASE("stationary bound state") {
    SimConfig c = quiet_config();
    c.absorber.strength = 0.0;
    const Setup s = well_on(c.domain);
    const SimResult r = propagate_bound_state(s.V, s.beta, c);
    REQUIRE(r.times.size() == r.projection_sq.size());
    CHECK(r.times.back() == doctest::Approx(c.t_final));
    for (double p : r.projection_sq) CHECK(p == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(std::abs(fit_decay_rate(r, 0.0, c.t_final)) < 1e-10);
}

TEST_CASE("forced evolution is unitary without the absorber") {
    SimConfig c = quiet_config();
    c.absorber.strength = 0.0;
    c.epsilon = 0.7;
    const Setup s = well_on(c.domain);
    const VectorXcd phi0 = s.bs.psi.cast<Complex>();
    const SimResult r = propagate(s.V, s.beta, s.bs.psi, phi0, c);
    // with sigma = 0 the interior norm is the full norm
    for (double n : r.norm) CHECK(n == doctest::Approx(r.norm.front()).epsilon(1e-6));
    for (double p : r.projection_sq) CHECK(p <= r.norm.front() * r.norm.front() * (1.0 + 1e-9));
}

TEST_CASE("norm never grows with the absorber on") {
    SimConfig c = quiet_config();
    c.t_final = 30.0;
    const Setup s = well_on(c.domain);
    VectorXcd phi0(c.domain.n);
    for (Index j = 0; j < c.domain.n; ++j) {
        const double x = c.domain.x(j);
        phi0(j) = std::exp(-std::pow(x / 2.0, 2)) * std::exp(Complex(0.0, 1.5 * x));
    }
    const SimResult r = propagate(s.V, s.beta, s.bs.psi, phi0, c);
    for (std::size_t i = 1; i < r.norm.size(); ++i) CHECK(r.norm[i] <= r.norm[i - 1] * (1.0 + 1e-12));
    CHECK(r.norm.back() < 0.9 * r.norm.front());
}

TEST_CASE("decay-rate fit") {
    SimResult synthetic;
    const double rate = 2.0 * 0.04 * 6e-3;
    for (int i = 0; i <= 400; ++i) {
        synthetic.times.push_back(0.1 * i);
        synthetic.projection_sq.push_back(0.9 * std::exp(-rate * 0.1 * i));
    }
    CHECK(fit_decay_rate(synthetic, 0.0, 40.0) == doctest::Approx(rate).epsilon(1e-6));
    CHECK(fit_decay_rate(synthetic, 10.0, 20.0) == doctest::Approx(rate).epsilon(1e-6));
    synthetic.projection_sq[50] = 0.0;
    CHECK_THROWS_AS(fit_decay_rate(synthetic, 0.0, 40.0), DomainError);
}

TEST_CASE("absorber reflects little at the resonant wavenumber") {
    const Grid g = make_grid(-60.0, 60.0, 6001);
    for (double k : {1.09, 1.19}) CHECK(absorber_reflection(g, Absorber{15.0, 2.0}, k, 0.01) < 1e-3);
}

TEST_CASE("noise-free filter run is the bound-state run") {
    SimConfig c = quiet_config();
    c.epsilon = 1.0;
    c.t_final = 5.0;
    const Setup s = well_on(c.domain);
    const SimResult a = propagate_bound_state(s.V, s.beta, c);
    const SimResult b = filter_experiment(s.V, s.beta, c, 0.0, 123);
    REQUIRE(a.projection_sq.size() == b.projection_sq.size());
    for (std::size_t i = 0; i < a.projection_sq.size(); ++i)
        CHECK(b.projection_sq[i] == doctest::Approx(a.projection_sq[i]).epsilon(1e-12));
}

TEST_CASE("noisy start is normalized and seeded") {
    SimConfig c = quiet_config();
    c.t_final = 1.0;
    const Setup s = well_on(c.domain);
    const SimResult a = filter_experiment(s.V, s.beta, c, 1.0, 5);
    const SimResult b = filter_experiment(s.V, s.beta, c, 1.0, 5);
    const SimResult d = filter_experiment(s.V, s.beta, c, 1.0, 6);
    CHECK(a.projection_sq.front() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(a.norm == b.norm);
    CHECK(a.norm.front() != d.norm.front());
    CHECK(a.norm.front() > 1.0);
}

TEST_CASE("configuration checks") {
    SimConfig c;
    CHECK_NOTHROW(c.validate(12.0, 1.0));
    CHECK_THROWS_AS(c.validate(50.0, 1.0), std::invalid_argument);
    c.dt_max = 1.0;
    CHECK_THROWS_AS(c.validate(12.0, 1.0), std::invalid_argument);
}

}
