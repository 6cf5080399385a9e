#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "obsim/integrate.hpp"
#include "obsim/steady_state.hpp"

using namespace obsim;

namespace {

double state_dist(const DensityState& a, const DensityState& b) {
    const Vec8 va = a.to_vec(), vb = b.to_vec();
    double m = 0.0;
    for (std::size_t i = 0; i < kDim; ++i) m = std::max(m, std::abs(va[i] - vb[i]));
    return m;
}

} // namespace

TEST_CASE("undriven ground state stays put") {
    const auto traj = integrate(DensityState::ground(), AtomParams{}, Drive{}, 10.0);
    REQUIRE(traj.size() >= 2);
    CHECK(traj.front().t == 0.0);
    CHECK(traj.back().t == 10.0);
    CHECK(state_dist(traj.back().state, DensityState::ground()) < 1e-9);
}

TEST_CASE("undriven upper-level population decays exponentially") {
    // all population in the excited level: rho22(t) = exp(-(gamma21+gamma23) t)
    DensityState st;
    st.d21 = 1.0;
    st.d23 = 1.0; // rho22 = 1
    AtomParams at; // gamma21 = gamma23 = 1
    const auto traj = integrate(st, at, Drive{}, 0.5, 1e-10, 1e-12);
    CHECK_THAT(traj.back().state.rho22(),
               Catch::Matchers::WithinAbs(std::exp(-1.0), 1e-8));
    // the branching is even: rho11 = rho33 = (1 - rho22)/2
    CHECK_THAT(traj.back().state.rho11(),
               Catch::Matchers::WithinAbs(0.5 * (1.0 - std::exp(-1.0)), 1e-8));
}

TEST_CASE("coupling-only drive pumps everything into the uncoupled level") {
    AtomParams at;
    DensityState st;
    st.d21 = 0.0;
    st.d23 = 0.0; // equal populations
    const Drive dr{cplx{0.0, 0.0}, cplx{2.0, 0.0}};
    const auto traj = integrate(st, at, dr, 200.0, 1e-10, 1e-12);
    CHECK_THAT(traj.back().state.rho11(), Catch::Matchers::WithinAbs(1.0, 1e-6));
    CHECK(std::abs(traj.back().state.rho23) < 1e-6);
}

TEST_CASE("coherences stay inside the physical bound") {
    AtomParams at;
    at.gamma31 = 0.025;
    const Drive dr{cplx{3.0, 0.0}, cplx{1.0, 0.0}};
    const auto traj = integrate(DensityState::ground(), at, dr, 50.0);
    for (const auto& pt : traj) {
        CHECK(std::abs(pt.state.rho21) <= 0.5 + 1e-8);
        CHECK(std::abs(pt.state.rho23) <= 0.5 + 1e-8);
        CHECK(std::abs(pt.state.rho31) <= 0.5 + 1e-8);
        CHECK(pt.state.rho22() >= -1e-8);
        CHECK(pt.state.rho22() <= 1.0 + 1e-8);
    }
}

TEST_CASE("long-time integration lands on the Newton steady state") {
    AtomParams at;
    at.gamma31 = 0.025;
    at.eps_p = at.eps_c = 1.0;
    at.gammaD21 = at.gammaD23 = 0.5;
    const Drive dr{cplx{2.0, 0.0}, cplx{2.0, 0.0}};
    const auto traj = integrate(DensityState::ground(), at, dr, 300.0, 1e-10, 1e-12);
    const DensityState ss = steady_state(at, dr);
    CHECK(state_dist(traj.back().state, ss) < 1e-7);
}

TEST_CASE("argument validation") {
    CHECK_THROWS_AS(integrate(DensityState::ground(), AtomParams{}, Drive{}, -1.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(integrate(DensityState::ground(), AtomParams{}, Drive{}, 1.0, 0.5),
                    std::invalid_argument);
    CHECK_THROWS_AS(integrate(DensityState::ground(), AtomParams{}, Drive{}, 1.0, 1e-8, 0.0),
                    std::invalid_argument);
}

TEST_CASE("step budget exhaustion reports the reached time") {
    AtomParams at;
    const Drive dr{cplx{5.0, 0.0}, cplx{1.0, 0.0}};
    try {
        integrate(DensityState::ground(), at, dr, 1000.0, 1e-10, 1e-12, 20);
        FAIL("expected IntegrationError");
    } catch (const IntegrationError& e) {
        CHECK(e.t > 0.0);
        CHECK(e.t < 1000.0);
    }
}
