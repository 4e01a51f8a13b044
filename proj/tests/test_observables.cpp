#include "ctqw/observables.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

using namespace ctqw;
using Catch::Approx;

TEST_CASE("probabilities", "[observables]")
{
    const std::vector<std::complex<double>> local{0, 0, 1, 0, 0};
    CHECK(probabilities(local) == std::vector<double>{0, 0, 1, 0, 0});

    const double r = 1.0 / std::sqrt(2.0);
    const std::vector<std::complex<double>> split{{r, 0}, {0, r}};
    const auto p = probabilities(split);
    CHECK(p[0] == Approx(0.5).margin(1e-15));
    CHECK(p[1] == Approx(0.5).margin(1e-15));
}

TEST_CASE("standard deviation", "[observables]")
{
    CHECK(sigma(std::vector<double>{0, 0, 1, 0, 0}, centered_labels(5)) == 0.0);
    CHECK(sigma(std::vector<double>(3, 1.0 / 3.0), centered_labels(3)) == Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-14));
    for (std::size_t n : {5u, 51u, 1001u}) {
        const std::vector<double> uniform(n, 1.0 / static_cast<double>(n));
        const double expected = std::sqrt((static_cast<double>(n * n) - 1.0) / 12.0);
        CHECK(sigma(uniform, centered_labels(n)) == Approx(expected).epsilon(1e-12));
    }
    // Labels only matter through signed positions: shifting them leaves sigma unchanged.
    std::vector<double> p{0.1, 0.2, 0.3, 0.4};
    const std::vector<double> a{-1, 0, 1, 2}, b{9, 10, 11, 12};
    CHECK(sigma(p, a) == Approx(sigma(p, b)).epsilon(1e-12));

    CHECK_THROWS_AS(sigma(p, std::vector<double>{1, 2}), std::invalid_argument);
    // Unnormalized input with a huge mean produces a clearly negative radicand.
    CHECK_THROWS_AS(sigma(std::vector<double>{2.0}, std::vector<double>{1e3}), NumericalInconsistency);
}

TEST_CASE("entropy and participation", "[observables]")
{
    CHECK(shannon(std::vector<double>{0, 1, 0}) == 0.0);
    CHECK(ipr(std::vector<double>{0, 1, 0}) == 1.0);
    CHECK(shannon(std::vector<double>{0.5, 0.5}) == Approx(0.30103).epsilon(1e-5));
    CHECK(ipr(std::vector<double>{0.5, 0.5}) == 2.0);
    for (std::size_t n : {2u, 10u, 999u}) {
        const std::vector<double> uniform(n, 1.0 / static_cast<double>(n));
        CHECK(shannon(uniform) == Approx(std::log10(static_cast<double>(n))).epsilon(1e-12));
        CHECK(ipr(uniform) == Approx(static_cast<double>(n)).epsilon(1e-12));
    }
    CHECK(shannon(std::vector<double>{1e-320, 1.0}) == 0.0);
    CHECK_THROWS_AS(ipr(std::vector<double>{0, 0}), std::invalid_argument);
}

TEST_CASE("bounds and permutation invariance", "[observables][property]")
{
    std::mt19937_64 rng(3);
    std::exponential_distribution<double> weight;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + rng() % 200;
        std::vector<double> p(n);
        double total = 0;
        for (auto& x : p) total += (x = weight(rng) * ((rng() % 3) ? 1.0 : 0.0));
        if (total == 0) continue;
        for (auto& x : p) x /= total;

        const double s = shannon(p), r = ipr(p);
        REQUIRE(s >= -1e-15);
        REQUIRE(s <= std::log10(static_cast<double>(n)) + 1e-12);
        REQUIRE(r >= 1.0 - 1e-12);
        REQUIRE(r <= static_cast<double>(n) + 1e-9);

        auto shuffled = p;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        REQUIRE(shannon(shuffled) == Approx(s).epsilon(1e-12));
        REQUIRE(ipr(shuffled) == Approx(r).epsilon(1e-12));
    }
}

TEST_CASE("edge leak", "[observables]")
{
    std::vector<double> p(41, 0.0);
    p[20] = 1.0 - 3e-9;
    p[0] = 1e-9;
    p[9] = 1e-9;
    p[40] = 1e-9;
    CHECK(boundary_leak(p) == Approx(3e-9).epsilon(1e-12));
    p[10] = 0.5; // 11th site from the edge does not count
    CHECK(boundary_leak(p) == Approx(3e-9).epsilon(1e-12));

    const std::vector<std::complex<double>> local{0, 0, 0, 1, 0, 0, 0};
    const auto rec = measure(local, 2.5);
    CHECK(rec.t == 2.5);
    CHECK(rec.sigma == 0.0);
    CHECK(rec.entropy == 0.0);
    CHECK(rec.ipr == 1.0);
}
