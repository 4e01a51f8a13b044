#include "ctqw/propagator.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

using namespace ctqw;
using Catch::Approx;

namespace {

LatticeModel lattice(std::size_t n, double eps = 0.0)
{
    LatticeModel m;
    m.n_sites = n;
    m.epsilon = eps;
    return m;
}

WaveState random_state(std::size_t n, std::mt19937_64& rng)
{
    std::normal_distribution<double> normal;
    WaveState s{std::vector<Complex>(n), 0.0};
    double norm = 0.0;
    for (auto& a : s.amplitudes) {
        a = {normal(rng), normal(rng)};
        norm += std::norm(a);
    }
    for (auto& a : s.amplitudes) a /= std::sqrt(norm);
    return s;
}

double max_diff(const WaveState& a, const WaveState& b)
{
    REQUIRE(a.size() == b.size());
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a.amplitudes[i] - b.amplitudes[i]));
    return d;
}

// Infinite uniform chain from a single site: P_j(t) = J_j(2 gamma t)^2.
double bessel_moment_sigma(double t, double gamma = 1.0)
{
    const double x = 2.0 * gamma * t;
    const int reach = static_cast<int>(x) + 200;
    double second = 0.0;
    for (int j = 1; j <= reach; ++j) {
        const double jj = std::cyl_bessel_j(static_cast<double>(j), x);
        second += 2.0 * static_cast<double>(j) * static_cast<double>(j) * jj * jj;
    }
    return std::sqrt(second);
}

} // namespace

TEST_CASE("series coefficients", "[propagator]")
{
    CHECK(bessel_series(0.0) == std::vector<double>{1.0});
    for (double z : {0.3, 1.0, 7.5, 42.0, 400.0, 3000.0}) {
        const auto j = bessel_series(z);
        REQUIRE(j.size() > z);
        REQUIRE(j.size() <= series_term_cap(z));
        // Sum rule J_0^2 + 2 sum J_k^2 = 1, independent of the normalization used.
        double squares = j[0] * j[0];
        for (std::size_t k = 1; k < j.size(); ++k) squares += 2.0 * j[k] * j[k];
        REQUIRE(squares == Approx(1.0).margin(1e-13));
        if (z > 500.0) continue; // beyond the range of std::cyl_bessel_j
        for (std::size_t k = 0; k < std::min<std::size_t>(j.size(), 60); ++k) {
            const double ref = std::cyl_bessel_j(static_cast<double>(k), z);
            REQUIRE(j[k] == Approx(ref).margin(1e-13));
        }
        // The first dropped order is already below the cutoff.
        REQUIRE(std::abs(std::cyl_bessel_j(static_cast<double>(j.size()), z)) < series_truncation);
    }
    CHECK_THROWS_AS(bessel_series(-1.0), std::invalid_argument);
    CHECK_THROWS_AS(bessel_series(std::nan("")), std::invalid_argument);
}

TEST_CASE("small systems in closed form", "[propagator]")
{
    // Single site: only a phase.
    const TridiagonalOperator one({0.0}, {});
    const WaveState s1{{Complex{1.0, 0.0}}, 0.0};
    const auto out1 = evolve_interval(s1, one, 3.0);
    CHECK(std::abs(out1.amplitudes[0] - Complex{1.0, 0.0}) < 1e-15);
    CHECK(out1.time == 3.0);

    const TridiagonalOperator shifted({0.7}, {});
    const auto phase = evolve_interval(s1, shifted, 2.0);
    CHECK(std::abs(phase.amplitudes[0] - std::exp(Complex{0.0, -1.4})) < 1e-13);

    // Two sites with hopping -1: (cos t, i sin t).
    const TridiagonalOperator two({0.0, 0.0}, {-1.0});
    const WaveState s2{{Complex{1.0, 0.0}, Complex{}}, 0.0};
    const auto half = evolve_interval(s2, two, std::numbers::pi / 2.0);
    CHECK(std::abs(half.amplitudes[0]) < 1e-10);
    CHECK(std::abs(half.amplitudes[1] - Complex{0.0, 1.0}) < 1e-10);
    for (double t : {0.1, 1.0, 2.9, 17.3}) {
        const auto out = evolve_interval(s2, two, t);
        CHECK(std::abs(out.amplitudes[0] - Complex{std::cos(t), 0.0}) < 1e-12);
        CHECK(std::abs(out.amplitudes[1] - Complex{0.0, std::sin(t)}) < 1e-12);
    }
}

TEST_CASE("series agrees with diagonalization", "[propagator]")
{
    std::mt19937_64 rng(2024);
    {
        const auto h = build_h(lattice(65), -2.5);
        const auto psi = random_state(65, rng);
        CHECK(max_diff(evolve_interval(psi, h, 3.7), eigen_oracle(h, 3.7, psi)) < 1e-8);
    }
    std::uniform_real_distribution<double> beta_dist(-4.0, 4.0);
    std::uniform_real_distribution<double> dt_dist(0.01, 25.0);
    std::uniform_real_distribution<double> eps_dist(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        auto m = lattice(2 * (1 + rng() % 127) + 1, eps_dist(rng));
        const auto reach = static_cast<long>(m.half_width()) - 1;
        m.defect_site = static_cast<long>(rng() % static_cast<std::uint64_t>(2 * reach + 1)) - reach;
        const auto h = build_h(m, beta_dist(rng));
        const auto psi = random_state(m.n_sites, rng);
        const double dt = dt_dist(rng);
        INFO("N=" << m.n_sites << " dt=" << dt);
        REQUIRE(max_diff(evolve_interval(psi, h, dt), eigen_oracle(h, dt, psi)) < 1e-8);
    }
}

TEST_CASE("oracle sanity", "[propagator]")
{
    std::mt19937_64 rng(9);
    const auto h = build_h(lattice(31, 0.2), -3.0);
    const auto psi = random_state(31, rng);

    const double dt = 1e-7;
    const auto out = eigen_oracle(h, dt, psi);
    const auto hpsi = h.apply<Complex>(psi.amplitudes);
    double err = 0.0;
    for (std::size_t i = 0; i < 31; ++i) {
        err = std::max(err, std::abs(out.amplitudes[i] - (psi.amplitudes[i] - Complex{0.0, dt} * hpsi[i])));
    }
    CHECK(err < 1e-12);
    CHECK(eigen_oracle(h, 50.0, psi).norm_squared() == Approx(1.0).margin(1e-12));
    CHECK_THROWS_AS(eigen_oracle(build_h0(lattice(513)), 1.0, initial_state(lattice(513))), std::invalid_argument);
}

TEST_CASE("unitarity and composition", "[propagator][property]")
{
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> dt_dist(0.05, 40.0);
    for (int trial = 0; trial < 15; ++trial) {
        const auto m = lattice(2 * (20 + rng() % 200) + 1, 0.1 * static_cast<double>(trial % 3));
        const auto h = build_h(m, trial % 2 ? -2.5 : -3.0);
        const auto psi = random_state(m.n_sites, rng);
        const double a = dt_dist(rng), b = dt_dist(rng);

        SpectralPropagator prop(psi);
        const ScaledOperator op(h);
        prop.advance(op, a);
        REQUIRE(std::abs(prop.norm_squared() - 1.0) < 1e-12);
        prop.advance(op, b);
        REQUIRE(std::abs(prop.norm_squared() - 1.0) < 1e-12);

        const auto joint = evolve_interval(psi, h, a + b);
        REQUIRE(max_diff(prop.state(), joint) < 1e-10);
        REQUIRE(prop.time() == Approx(a + b));
    }
}

TEST_CASE("ballistic spreading of the free chain", "[propagator]")
{
    // The moment sum reproduces sqrt(2) gamma t for the infinite chain.
    for (double t : {20.0, 50.0, 100.0}) {
        CHECK(bessel_moment_sigma(t) == Approx(std::sqrt(2.0) * t).epsilon(1e-9));
    }

    const double t_max = 100.0;
    auto m = lattice(required_sites(t_max));
    const auto table = run_protocol(m, StaticProtocol{0.0}, t_max, 10.0);
    REQUIRE(table.samples.size() == 11);
    for (const auto& s : table.samples) {
        if (s.t < 20.0) continue;
        INFO("t=" << s.t);
        CHECK(s.sigma == Approx(bessel_moment_sigma(s.t)).epsilon(1e-9));
        CHECK(s.sigma == Approx(std::sqrt(2.0) * s.t).epsilon(0.005));
    }
    CHECK(table.max_leak < 1e-8);
    CHECK(table.max_norm_drift < 1e-12);

    // Dense backend on a smaller lattice at t = 20.
    const auto small = lattice(257);
    const auto dense_state = eigen_oracle(build_h0(small), 20.0, initial_state(small));
    const auto rec = measure(dense_state.amplitudes, 20.0);
    CHECK(rec.sigma == Approx(bessel_moment_sigma(20.0)).epsilon(1e-9));
}

TEST_CASE("mirror symmetry and energy shift", "[propagator][property]")
{
    const double t_max = 60.0;
    for (double beta : {0.0, -2.5, -3.0}) {
        const auto m = lattice(required_sites(t_max));
        WaveState last;
        RunOptions options;
        options.observer = [&](const WaveState& s) { last = s; };
        run_protocol(m, StaticProtocol{beta}, t_max, t_max, options);
        const auto p = probabilities(last.amplitudes);
        double asym = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) asym = std::max(asym, std::abs(p[i] - p[p.size() - 1 - i]));
        CHECK(asym < 1e-10);

        auto shifted = m;
        shifted.epsilon = 1.75;
        WaveState last_shifted;
        RunOptions shifted_options;
        shifted_options.observer = [&](const WaveState& s) { last_shifted = s; };
        run_protocol(shifted, StaticProtocol{beta}, t_max, t_max, shifted_options);
        const auto q = probabilities(last_shifted.amplitudes);
        double shift_err = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) shift_err = std::max(shift_err, std::abs(p[i] - q[i]));
        CHECK(shift_err < 1e-10);
    }
}

TEST_CASE("switching schedule", "[propagator]")
{
    const auto m = lattice(201);
    const auto h1 = build_h(m, m.beta1);
    const auto h2 = build_h(m, m.beta2);

    // Symbols 1,0,1 at tau = 5 up to t = 12: beta1 on [0,5), beta2 on [5,10), beta1 on [10,12].
    const BinarySequence seq({1, 0, 1}, SequenceKind::Periodic);
    WaveState last;
    RunOptions options;
    options.observer = [&](const WaveState& s) { last = s; };
    const auto table = run_protocol(m, SwitchingProtocol::from_model(seq, 5.0, m), 12.0, 12.0, options);
    CHECK(table.samples.size() == 2);
    CHECK(table.tau == 5.0);

    auto ref = initial_state(m);
    ref = eigen_oracle(h1, 5.0, ref);
    ref = eigen_oracle(h2, 5.0, ref);
    ref = eigen_oracle(h1, 2.0, ref);
    CHECK(max_diff(last, ref) < 1e-9);

    // Sampling inside intervals does not change the trajectory.
    WaveState fine;
    RunOptions fine_options;
    fine_options.observer = [&](const WaveState& s) { fine = s; };
    const auto dense = run_protocol(m, SwitchingProtocol::from_model(seq, 5.0, m), 12.0, 0.5, fine_options);
    CHECK(dense.samples.size() == 25);
    CHECK(dense.samples[7].t == 3.5);
    CHECK(max_diff(fine, ref) < 1e-9);

    // Equal intensities reduce to the static defect.
    const auto wide = lattice(required_sites(50.0));
    const auto word = generate(SequenceKind::Fibonacci, 40);
    const auto same = run_protocol(wide, SwitchingProtocol(word, 1.3, -2.5, -2.5), 50.0, 5.0);
    const auto fixed = run_protocol(wide, StaticProtocol{-2.5}, 50.0, 5.0);
    REQUIRE(same.samples.size() == fixed.samples.size());
    for (std::size_t i = 0; i < same.samples.size(); ++i) {
        CHECK(same.samples[i].sigma == Approx(fixed.samples[i].sigma).epsilon(1e-10));
    }
}

TEST_CASE("run preconditions", "[propagator]")
{
    const auto m = lattice(101);
    const BinarySequence short_seq({1, 0}, SequenceKind::Periodic);
    CHECK_THROWS_AS(run_protocol(m, SwitchingProtocol(short_seq, 1.0, -2.5, -3.0), 3.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(SwitchingProtocol(short_seq, 0.0, -2.5, -3.0), std::invalid_argument);
    CHECK_THROWS_AS(run_protocol(m, StaticProtocol{}, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(run_protocol(m, StaticProtocol{}, 1.0, 0.0), std::invalid_argument);

    try {
        run_protocol(lattice(41), StaticProtocol{}, 30.0, 1.0);
        FAIL("expected LatticeTooSmall");
    } catch (const LatticeTooSmall& e) {
        CHECK(e.current_sites == 41);
        CHECK(e.required_sites >= required_sites(30.0));
    }
    RunOptions off;
    off.leak_limit = -1.0;
    CHECK_NOTHROW(run_protocol(lattice(41), StaticProtocol{}, 30.0, 1.0, off));
}
