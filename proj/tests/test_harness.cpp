#include <atomic>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "npt/harness.hpp"

using namespace npt;

namespace {

ExperimentConfig free_gas(std::size_t n = 1) {
    ExperimentConfig c;
    c.scheme = SchemeKind::SecondOrderSplitting;
    c.field = FieldKind::Free;
    c.n = n;
    c.beta = 1.0;
    c.p0 = 1.0;
    c.dt = 1e-3;
    return c;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("initial conditions") {
    auto c = free_gas(8);
    c.rho0 = 0.5;
    CHECK(initial_volume(c) == 16.0);
    c.volume0 = 3.0;
    CHECK(initial_volume(c) == 3.0);

    const auto lattice = lattice_positions(8, 2.0);
    REQUIRE(lattice.size() == 8);
    for (const auto& r : lattice) {
        for (int k = 0; k < 3; ++k) CHECK((r[k] == 0.5 || r[k] == 1.5));
    }
    CHECK(lattice_positions(9, 3.0).size() == 9);

    c.momenta = MomentumInit::Zero;
    NoiseStream noise(1, 0);
    const auto s = initial_state(c, noise);
    CHECK(noise.draws() == 0);
    for (const auto& p : s.momenta) CHECK(p == Vec3{});
    c.momenta = MomentumInit::Maxwell;
    const auto t = initial_state(c, noise);
    CHECK(noise.draws() == 24);
    CHECK(t.volume() == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("frozen free particle gives a constant series") {
    auto c = free_gas();
    c.lambda = 0.0;
    c.gamma = 0.0;
    c.momenta = MomentumInit::Zero;
    c.steps = 1000;
    const auto series = run_trajectory(c);
    REQUIRE(series.records.size() == 1000);
    CHECK_FALSE(series.failure);
    for (const auto& rec : series.records) {
        CHECK(rec.volume == series.records.front().volume);
        CHECK(rec.kinetic == 0.0);
        CHECK(rec.pressure == 0.0);
    }
}

TEST_CASE("sampling respects burn-in and stride") {
    auto c = free_gas();
    c.steps = 10;
    c.burn_in = 3;
    c.stride = 2;
    const auto series = run_trajectory(c);
    CHECK(series.steps == std::vector<std::uint64_t>{5, 7, 9});
}

TEST_CASE("trajectories are deterministic") {
    auto c = free_gas(4);
    c.field = FieldKind::Quartic;
    c.steps = 2000;
    c.seed = 17;
    const auto a = run_trajectory(c, 3);
    const auto b = run_trajectory(c, 3);
    CHECK(a.records == b.records);
    const auto other = run_trajectory(c, 4);
    CHECK(other.records != a.records);
}

TEST_CASE("first-order step failures are reported with the step index") {
    auto c = free_gas();
    c.scheme = SchemeKind::EulerMaruyama;
    c.dt = 0.5;
    c.steps = 10000;
    const auto series = run_trajectory(c);
    REQUIRE(series.failure);
    CHECK(series.failure->step >= 1);
    CHECK(series.records.size() == series.failure->step - 1);
    CHECK(series.failure->attempted_volume <= 0.0);
    CHECK(series.failure->message.find("volume went nonpositive") != std::string::npos);
}

TEST_CASE("test functions") {
    const auto params = PhysicalParams::uniform(2, 1.0, 1.0, 1.0, 1.0, LambdaForm{1.0});
    const SystemState s({{0, 0, 0}, {1, 1, 1}}, {{1, 0, 0}, {0, 1, 0}}, std::log(4.0));
    const ForceFieldModel field = FreeGas{};
    CHECK(evaluate(TestFunction::Volume, s, field, params) == doctest::Approx(4.0));
    CHECK(evaluate(TestFunction::VolumeSquared, s, field, params) == doctest::Approx(16.0));
    CHECK(evaluate(TestFunction::ExpSqrtVolume, s, field, params) == doctest::Approx(std::exp(-2.0)));
    CHECK(evaluate(TestFunction::SqrtVolumeExp, s, field, params) == doctest::Approx(2.0 * std::exp(-2.0)));
    CHECK(evaluate(TestFunction::Density, s, field, params) == doctest::Approx(0.5));
    CHECK(evaluate(TestFunction::Pressure, s, field, params) == doctest::Approx(2.0 / 12.0));
    for (auto phi : {TestFunction::Volume, TestFunction::VolumeSquared, TestFunction::ExpSqrtVolume,
                     TestFunction::Pressure, TestFunction::Density, TestFunction::SqrtVolumeExp}) {
        CHECK(parse_test_function(test_function_name(phi)) == phi);
    }
    CHECK_THROWS(parse_test_function("V3"));
}

TEST_CASE("single replica equals the trajectory terminal state") {
    auto c = free_gas(3);
    c.steps = 500;
    c.replicas = 1;
    const std::vector<TestFunction> phis{TestFunction::Volume, TestFunction::Pressure};
    const auto ens = replicate_terminal(c, phis);
    const auto run = run_trajectory(c, [](std::uint64_t, const ObservableRecord&) {}, 0);
    const auto params = make_params(c);
    const auto field = make_field(c);
    CHECK(ens.values[0][0] == evaluate(TestFunction::Volume, run.final_state, field, params));
    CHECK(ens.values[0][1] == evaluate(TestFunction::Pressure, run.final_state, field, params));
    CHECK(ens.means[0] == ens.values[0][0]);
}

TEST_CASE("frozen replicas keep the initial volume") {
    auto c = free_gas();
    c.lambda = 0.0;
    c.gamma = 0.0;
    c.momenta = MomentumInit::Zero;
    c.steps = 100;
    c.replicas = 20;
    const std::vector<TestFunction> phis{TestFunction::Volume};
    const auto ens = replicate_terminal(c, phis);
    for (const auto& row : ens.values) CHECK(row[0] == doctest::Approx(initial_volume(c)).epsilon(1e-14));
}

TEST_CASE("ensemble results do not depend on the thread count") {
    auto c = free_gas(2);
    c.steps = 200;
    c.replicas = 64;
    const std::vector<TestFunction> phis{TestFunction::Volume, TestFunction::ExpSqrtVolume};
    c.threads = 1;
    const auto serial = replicate_terminal(c, phis);
    c.threads = 4;
    const auto parallel = replicate_terminal(c, phis);
    CHECK(serial.values == parallel.values);
    CHECK(serial.means == parallel.means);
    CHECK(serial.standard_errors == parallel.standard_errors);
}

TEST_CASE("disjoint seeds give statistically equal ensemble means") {
    auto c = free_gas();
    c.dt = 1e-2;
    c.steps = 500;
    c.replicas = 2000;
    c.threads = 4;
    const std::vector<TestFunction> phis{TestFunction::Volume, TestFunction::VolumeSquared};
    c.seed = 101;
    const auto a = replicate_terminal(c, phis);
    c.seed = 202;
    const auto b = replicate_terminal(c, phis);
    for (std::size_t f = 0; f < phis.size(); ++f) {
        const double se = std::hypot(a.standard_errors[f], b.standard_errors[f]);
        CHECK(std::abs(a.means[f] - b.means[f]) < 4.0 * se);
    }
}

TEST_CASE("free-gas stationary moments") {
    auto c = free_gas();
    c.steps = 1000000;
    c.burn_in = 1000;
    c.stride = 10;
    c.seed = 5;
    const auto series = run_trajectory(c);
    REQUIRE_FALSE(series.failure);
    std::vector<double> v, v2;
    for (const auto& r : series.records) {
        v.push_back(r.volume);
        v2.push_back(r.volume * r.volume);
    }
    StreamingMoments mv, mv2;
    for (double x : v) mv.add(x);
    for (double x : v2) mv2.add(x);
    CHECK(std::abs(mv.mean() - 2.0) < 3.0 * batch_means_standard_error(v, 50));
    CHECK(std::abs(mv2.mean() - 6.0) < 3.0 * batch_means_standard_error(v2, 50));
}

TEST_CASE("weak order fit") {
    std::vector<double> dts, quad, lin;
    for (int l = 5; l <= 9; ++l) {
        const double dt = std::ldexp(1.0, -l);
        dts.push_back(dt);
        quad.push_back(3.0 * dt * dt);
        lin.push_back(0.5 * dt);
    }
    CHECK(std::abs(weak_order_fit(dts, quad).slope - 2.0) < 1e-12);
    CHECK(std::abs(weak_order_fit(dts, lin).slope - 1.0) < 1e-12);
    CHECK(weak_order_fit(dts, quad).residual < 1e-12);

    std::mt19937_64 rng(7);
    std::normal_distribution<double> g(0.0, 0.05);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> d, e;
        for (int l = 9; l <= 13; ++l) {
            const double dt = std::ldexp(1.0, -l);
            d.push_back(dt);
            e.push_back(2.0 * dt * dt * (1.0 + g(rng)));
        }
        CHECK(std::abs(weak_order_fit(d, e).slope - 2.0) < 0.1);
    }

    std::vector<double> with_zero = quad;
    with_zero[1] = 0.0;
    const auto fit = weak_order_fit(dts, with_zero);
    CHECK(fit.excluded == std::vector<std::size_t>{1});
    CHECK(std::abs(fit.slope - 2.0) < 1e-12);

    const std::vector<double> two_dt{0.1, 0.2}, two_err{0.01, 0.04};
    CHECK_THROWS(weak_order_fit(two_dt, two_err));
}

TEST_CASE("convergence report is reproducible") {
    auto c = free_gas();
    c.replicas = 50;
    c.level_min = 2;
    c.level_max = 4;
    c.level_ref = 6;
    c.t_end = 1.0;
    c.threads = 3;
    const auto a = run_convergence(c);
    const auto b = run_convergence(c);
    REQUIRE(a.levels.size() == 3);
    for (std::size_t i = 0; i < a.levels.size(); ++i) {
        CHECK(a.levels[i].means == b.levels[i].means);
        CHECK(a.levels[i].errors == b.levels[i].errors);
        CHECK(a.levels[i].dt == std::ldexp(1.0, -(i + 2)));
        for (double e : a.levels[i].errors) CHECK(e >= 0.0);
    }
    CHECK(a.reference.means == b.reference.means);
    CHECK(a.fits.size() == 3);

    c.coupling = NoiseCoupling::Independent;
    const auto ind = run_convergence(c);
    CHECK(ind.levels[0].means != a.levels[0].means);
}

TEST_CASE("exact free-gas density") {
    for (double v : {0.1, 1.0, 3.7}) {
        CHECK(exact_free_gas_density(v, 0, 1.0, 1.0) == doctest::Approx(std::exp(-v)).epsilon(1e-14));
    }
    CHECK_THROWS(exact_free_gas_density(0.0, 1, 1.0, 1.0));
    CHECK_THROWS(exact_free_gas_density(-1.0, 1, 1.0, 1.0));

    for (std::size_t n : {1u, 100u}) {
        const double hi = n == 1 ? 60.0 : 400.0;
        const std::size_t points = 400001;
        double sum = 0.0;
        const double h = hi / static_cast<double>(points - 1);
        for (std::size_t i = 1; i < points; ++i) {
            const double f = exact_free_gas_density(h * static_cast<double>(i), n, 1.0, 1.0);
            sum += (i == points - 1) ? 0.5 * f : f;
        }
        CHECK(std::abs(sum * h - 1.0) < 1e-8);
    }

    for (std::size_t n : {1u, 5u, 100u}) {
        const double mode = static_cast<double>(n) / (2.0 * 0.5);
        const double at = exact_free_gas_density(mode, n, 2.0, 0.5);
        CHECK(at > exact_free_gas_density(mode * (1.0 + 1e-3), n, 2.0, 0.5));
        CHECK(at > exact_free_gas_density(mode * (1.0 - 1e-3), n, 2.0, 0.5));
    }
}

TEST_CASE("histogram examples") {
    const std::vector<double> one{3.2};
    const auto h1 = histogram(one, 0.0, 10.0, 10);
    CHECK(h1.counts[3] == 1);
    CHECK(h1.density[3] == doctest::Approx(1.0));

    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> flat(100000);
    for (auto& x : flat) x = u(rng);
    const auto hu = histogram(flat, 0.0, 1.0, 10);
    double mass = 0.0;
    for (double d : hu.density) {
        CHECK(std::abs(d - 1.0) < 5.0 * std::sqrt(0.1 * 0.9 / 100000.0) / 0.1);
        mass += d * hu.width();
    }
    CHECK(std::abs(mass - 1.0) < 1e-12);

    const auto hauto = histogram(flat, 0.0, 0.0, 7);
    CHECK(hauto.outside == 0);
    CHECK(hauto.lo > 0.0);
    CHECK(hauto.hi < 1.0);

    const std::vector<double> none;
    CHECK_THROWS(histogram(none, 0.0, 1.0, 10));
    const std::vector<double> out{0.5, 2.0};
    CHECK_THROWS(histogram(out, 0.0, 1.0, 10));
    const auto kept = histogram(out, 0.0, 1.0, 10, true);
    CHECK(kept.outside == 1);
    CHECK(kept.density[5] == doctest::Approx(5.0));
}

TEST_CASE("Gamma(2,1) samples match the N=1 density") {
    std::mt19937_64 rng(9);
    std::gamma_distribution<double> gamma(2.0, 1.0);
    std::vector<double> xs(1000000);
    for (auto& x : xs) x = gamma(rng);
    const auto h = histogram(xs, 0.0, 20.0, 100, true);
    const auto exact = [](double v) { return exact_free_gas_density(v, 1, 1.0, 1.0); };
    CHECK(histogram_l1(h, exact) < 0.02);

    const auto grid = h.centers();
    std::vector<double> ref;
    for (double v : grid) ref.push_back(exact(v));
    CHECK(distribution_distance(h.density, ref, grid) < 0.02);
}

TEST_CASE("distribution distance") {
    const auto grid = uniform_grid(0.0, 2.0, 2001);
    std::vector<double> a, b;
    for (double x : grid) {
        a.push_back(x < 1.0 ? 1.0 : 0.0);
        b.push_back(x > 1.0 ? 1.0 : 0.0);
    }
    CHECK(distribution_distance(a, a, grid) == 0.0);
    CHECK(distribution_distance(a, b, grid) == doctest::Approx(2.0).epsilon(1e-3));
    CHECK(distribution_distance(a, b, grid) == distribution_distance(b, a, grid));
    const std::vector<double> shorter(10, 1.0);
    CHECK_THROWS_WITH(distribution_distance(a, shorter, grid), "grid mismatch");
}

TEST_CASE("grid helpers") {
    const auto g = uniform_grid(1.0, 3.0, 5);
    CHECK(g == std::vector<double>{1.0, 1.5, 2.0, 2.5, 3.0});
    const std::vector<double> line{1.0, 1.5, 2.0, 2.5, 3.0};
    CHECK(trapezoid(line, g) == doctest::Approx(4.0));
    const auto n = normalize_on_grid(line, g);
    CHECK(trapezoid(n, g) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("thermodynamic integration examples") {
    const auto grid = uniform_grid(10.0, 60.0, 51);
    const std::vector<double> flat(51, 1.5);
    const auto p = thermodynamic_integration(grid, flat, 1.5, 1.0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(p.free_energy[i] == 0.0);
        CHECK(p.density[i] == doctest::Approx(1.0 / 50.0).epsilon(1e-14));
    }

    const std::vector<double> shifted(51, 1.5 + 0.2);
    const auto q = thermodynamic_integration(grid, shifted, 1.5, 1.0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(q.free_energy[i] == doctest::Approx(-0.2 * (grid[i] - 10.0)).epsilon(1e-12));
    }

    const std::vector<double> bad_grid{1.0, 3.0, 2.0};
    const std::vector<double> bad_p{1.0, 1.0, 1.0};
    CHECK_THROWS(thermodynamic_integration(bad_grid, bad_p, 1.0, 1.0));
    CHECK_THROWS(thermodynamic_integration(grid, bad_p, 1.0, 1.0));
}

TEST_CASE("thermodynamic integration of the ideal-gas pressure") {
    for (std::size_t n : {1u, 10u}) {
        const double beta = 1.0, p0 = 1.0;
        const auto grid = uniform_grid(0.2, 4.0 * (n + 1.0), 401);
        std::vector<double> pressures, exact;
        for (double v : grid) {
            pressures.push_back(static_cast<double>(n) / (beta * v));
            exact.push_back(exact_free_gas_density(v, n, beta, p0));
        }
        const auto profile = thermodynamic_integration(grid, pressures, p0, beta);
        const auto ref = normalize_on_grid(exact, grid);
        CHECK(distribution_distance(profile.density, ref, grid) < 1e-3);
    }
}

TEST_CASE("parallel_for visits every index once") {
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), 8, [&](std::size_t i) { hits[i].fetch_add(1); });
    for (auto& h : hits) CHECK(h.load() == 1);
}

TEST_CASE("configuration validation") {
    auto c = free_gas();
    CHECK_NOTHROW(validate(c));
    c.dt = 0.0;
    CHECK_THROWS_WITH(validate(c), "Δt must be positive");
    c = free_gas();
    c.n = 0;
    CHECK_THROWS(validate(c));
    c = free_gas();
    c.friction = FrictionKind::CellRescaling;
    CHECK_THROWS(validate(c));
    c.scheme = SchemeKind::EulerMaruyama;
    CHECK_NOTHROW(validate(c));
}

}  // TEST_SUITE
