#include <catch2/catch_amalgamated.hpp>

#include <string>
#include <vector>

#include "obsim/csv.hpp"
#include "obsim/sweep.hpp"

using namespace obsim;

TEST_CASE("grid spec produces an inclusive linear grid") {
    GridSpec g;
    g.min = 1.0;
    g.max = 3.0;
    g.count = 5;
    const auto v = g.values();
    REQUIRE(v.size() == 5);
    CHECK(v.front() == 1.0);
    CHECK(v.back() == 3.0);
    CHECK_THAT(v[2], Catch::Matchers::WithinAbs(2.0, 1e-15));
    g.count = 1;
    CHECK_THROWS_AS(g.values(), std::invalid_argument);
    g.count = 5;
    g.max = g.min;
    CHECK_THROWS_AS(g.values(), std::invalid_argument);
}

TEST_CASE("set_param: scalar paths, compound paths, unknown paths") {
    SweepBase base;
    set_param(base, "atom.delta_c", 1.5);
    CHECK(base.atom.delta_c == 1.5);
    set_param(base, "drive.omega_c", 7.0);
    CHECK(base.omega_c == cplx{7.0, 0.0});
    set_param(base, "cavity.C", 42.0);
    CHECK(base.cavity.C == 42.0);
    set_param(base, "atom.eps", 2.0);
    CHECK(base.atom.eps_p == 2.0);
    CHECK(base.atom.eps_c == 2.0);
    set_param(base, "atom.gamma_d", 1.5);
    CHECK(base.atom.gammaD21 == 1.5);
    CHECK(base.atom.gammaD23 == 1.5);
    set_param(base, "atom.eps_p", 0.3); // narrow path leaves the partner alone
    CHECK(base.atom.eps_p == 0.3);
    CHECK(base.atom.eps_c == 2.0);
    try {
        set_param(base, "atom.bogus", 1.0);
        FAIL("expected invalid_argument");
    } catch (const std::invalid_argument& e) {
        // the error enumerates the valid paths
        CHECK(std::string(e.what()).find("drive.omega_c") != std::string::npos);
    }
}

TEST_CASE("figure presets define the canonical families") {
    const auto names = preset_names();
    REQUIRE(names.size() == 8);
    for (const auto& n : names) {
        const SweepSpec spec = figure_preset(n);
        CHECK(spec.name == n);
        CHECK(spec.base.atom.gamma21 == 1.0);
        CHECK(spec.base.atom.gamma23 == 1.0);
        CHECK(spec.base.atom.gamma31 == 0.025);
        CHECK(spec.base.cavity.C == 150.0);
        CHECK(spec.base.cavity.theta == 0.0);
        CHECK(spec.base.x_grid.count == 1401);
        CHECK(spec.base.x_grid.max == 28.0);
        CHECK(spec.emit_curves);
        REQUIRE(spec.axes.size() == 1);
        CHECK(spec.axes[0].values.size() == 5);
        spec.validate();
    }
    const SweepSpec a3 = figure_preset("fig3a");
    CHECK(a3.axes[0].path == "drive.omega_c");
    CHECK(a3.axes[0].values == std::vector<double>{0.05, 0.1, 0.2, 0.5, 1.0});
    CHECK(a3.base.atom.delta_c == 0.0);
    const SweepSpec b3 = figure_preset("fig3b");
    CHECK(b3.base.atom.delta_c == 1.0);
    CHECK(b3.axes[0].values == std::vector<double>{1.0, 3.0, 5.0, 7.0, 10.0});
    const SweepSpec a4 = figure_preset("fig4a");
    CHECK(a4.base.omega_c == cplx{2.0, 0.0});
    CHECK(a4.axes[0].path == "atom.eps");
    CHECK(a4.axes[0].values == std::vector<double>{0.1, 0.5, 1.0, 1.5, 2.0});
    const SweepSpec b4 = figure_preset("fig4b");
    CHECK(b4.base.omega_c == cplx{3.0, 0.0});
    CHECK(b4.axes[0].path == "atom.eps");
    const SweepSpec a5 = figure_preset("fig5a");
    CHECK(a5.base.atom.eps_p == 1.0);
    CHECK(a5.base.atom.gammaD21 == 0.0);
    CHECK(a5.axes[0].path == "drive.omega_c");
    const SweepSpec b5 = figure_preset("fig5b");
    CHECK(b5.base.atom.eps_p == 1.0);
    CHECK(b5.base.atom.gammaD21 == 1.5);
    CHECK(b5.base.atom.gammaD23 == 1.5);
    const SweepSpec a6 = figure_preset("fig6a");
    CHECK(a6.base.atom.eps_p == 2.0);
    CHECK(a6.base.atom.eps_c == 2.0);
    CHECK(a6.base.atom.gammaD21 == 0.0);
    const SweepSpec b6 = figure_preset("fig6b");
    CHECK(b6.base.atom.eps_p == 2.0);
    CHECK(b6.base.atom.gammaD21 == 3.0);
    try {
        figure_preset("fig9z");
        FAIL("expected invalid_argument");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("fig6b") != std::string::npos);
    }
}

namespace {

// Cheap base: an empty cavity never bends the curve, every point is trivial.
SweepSpec cheap_spec() {
    SweepSpec spec;
    spec.base.atom.gamma31 = 0.025;
    spec.base.cavity.C = 0.0;
    spec.base.x_grid = GridSpec{0.0, 2.0, 101};
    return spec;
}

} // namespace

TEST_CASE("run_sweep with no axes evaluates the base point once") {
    SweepSpec spec = cheap_spec();
    const SweepResult res = run_sweep(spec);
    REQUIRE(res.records.size() == 1);
    CHECK(res.records[0].ok);
    CHECK(res.records[0].axis_index.empty());
    CHECK(res.records[0].turning_points == 0);
    CHECK(res.records[0].curve.points.empty()); // emit_curves defaults off
}

TEST_CASE("run_sweep walks the Cartesian grid row-major, last axis fastest") {
    SweepSpec spec = cheap_spec();
    spec.axes.push_back({"cavity.theta", {0.1, 0.2}});
    spec.axes.push_back({"atom.delta_p", {0.0, 0.5, 1.0}});
    spec.emit_curves = true;
    const SweepResult res = run_sweep(spec);
    REQUIRE(res.records.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) {
        const auto& r = res.records[i];
        REQUIRE(r.ok);
        REQUIRE(r.axis_index.size() == 2);
        CHECK(r.axis_index[0] == i / 3);
        CHECK(r.axis_index[1] == i % 3);
        CHECK(r.axis_values[0] == spec.axes[0].values[r.axis_index[0]]);
        CHECK(r.axis_values[1] == spec.axes[1].values[r.axis_index[1]]);
        REQUIRE(r.curve.points.size() == 101);
        // C = 0 with theta: y = x (1 + i theta/T), so |y| = x sqrt(1+(theta/T)^2)
        const double tilt = std::hypot(1.0, r.axis_values[0] / spec.base.cavity.T);
        CHECK_THAT(r.curve.points[50].y_mag,
                   Catch::Matchers::WithinRel(r.curve.points[50].x * tilt, 1e-12));
    }
}

TEST_CASE("run_sweep records a per-point failure without aborting the grid") {
    SweepSpec spec = cheap_spec();
    spec.axes.push_back({"cavity.T", {0.01, -1.0}});
    const SweepResult res = run_sweep(spec);
    REQUIRE(res.records.size() == 2);
    CHECK(res.records[0].ok);
    CHECK_FALSE(res.records[1].ok);
    CHECK(res.records[1].error.find("T") != std::string::npos);
}

TEST_CASE("sweep validation rejects unknown axes, empty axes and oversized grids") {
    SweepSpec spec = cheap_spec();
    spec.axes.push_back({"atom.nope", {1.0}});
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec.axes[0] = {"atom.delta_p", {}};
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec.axes[0] = {"atom.delta_p", {1, 2, 3, 4, 5, 6, 7}};
    spec.max_points = 5;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    CHECK_THROWS_AS(run_sweep(spec), std::invalid_argument);
    spec.max_points = 100;
    CHECK_THROWS_AS(run_sweep(spec, 0), std::invalid_argument);
}

TEST_CASE("sweep results are byte-identical across worker counts") {
    const SweepSpec spec = figure_preset("fig3a");
    const SweepResult seq = run_sweep(spec, 1);
    const SweepResult par = run_sweep(spec, 8);
    REQUIRE(seq.records.size() == 5);
    for (const auto& r : seq.records) CHECK(r.ok);
    CHECK(sweep_summary_csv(seq) == sweep_summary_csv(par));
    // and the full per-point curves agree bitwise, not just the summary
    REQUIRE(par.records.size() == seq.records.size());
    for (std::size_t i = 0; i < seq.records.size(); ++i)
        CHECK(curve_csv(seq.records[i].curve) == curve_csv(par.records[i].curve));
}
