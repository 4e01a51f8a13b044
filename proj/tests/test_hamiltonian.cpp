#include "ctqw/hamiltonian.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include <complex>
#include <random>
#include <vector>

using namespace ctqw;

namespace {

LatticeModel lattice(std::size_t n, double eps = 0.0, double gamma = 1.0)
{
    LatticeModel m;
    m.n_sites = n;
    m.epsilon = eps;
    m.gamma = gamma;
    return m;
}

Eigen::MatrixXd dense(const TridiagonalOperator& h)
{
    const auto n = static_cast<Eigen::Index>(h.size());
    Eigen::MatrixXd out(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = 0; c < n; ++c) {
            out(r, c) = h.entry(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
        }
    }
    return out;
}

} // namespace

TEST_CASE("defect-free chain", "[hamiltonian]")
{
    const auto h3 = build_h0(lattice(3));
    CHECK(std::vector<double>(h3.diagonal().begin(), h3.diagonal().end()) == std::vector<double>{0, 0, 0});
    CHECK(std::vector<double>(h3.off_diagonal().begin(), h3.off_diagonal().end()) == std::vector<double>{-1, -1});

    const auto h5 = build_h0(lattice(5, 2.0));
    CHECK(std::vector<double>(h5.diagonal().begin(), h5.diagonal().end()) == std::vector<double>(5, 2.0));
    CHECK(std::vector<double>(h5.off_diagonal().begin(), h5.off_diagonal().end()) == std::vector<double>(4, -1.0));

    for (std::size_t n : {3u, 7u, 21u}) {
        const auto d = dense(build_h0(lattice(n)));
        CHECK(d == d.transpose());
    }
}

TEST_CASE("transition defect couplings", "[hamiltonian]")
{
    // -gamma - beta on both defect bonds: the double negative makes them positive.
    const auto h = build_h(lattice(3), -2.5);
    CHECK(std::vector<double>(h.diagonal().begin(), h.diagonal().end()) == std::vector<double>{0, 0, 0});
    CHECK(std::vector<double>(h.off_diagonal().begin(), h.off_diagonal().end()) == std::vector<double>{1.5, 1.5});

    const auto h2 = build_h(lattice(3), -3.0);
    CHECK(std::vector<double>(h2.off_diagonal().begin(), h2.off_diagonal().end()) == std::vector<double>{2.0, 2.0});

    CHECK(build_h(lattice(11), 0.0) == build_h0(lattice(11)));
    CHECK(build_h(lattice(11), -2.5).norm_bound() == 3.0);
    CHECK(build_h(lattice(11), -3.0).norm_bound() == 4.0);
}

TEST_CASE("defect term only touches the two defect bonds", "[hamiltonian][property]")
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> beta_dist(-5.0, 5.0);
    for (int trial = 0; trial < 30; ++trial) {
        auto m = lattice(2 * (3 + rng() % 20) + 1, 0.3, 0.5 + static_cast<double>(rng() % 10) / 4.0);
        m.defect_site = static_cast<long>(rng() % (m.half_width() - 1)) * ((rng() % 2) ? 1 : -1);
        const double beta = beta_dist(rng);
        const Eigen::MatrixXd diff = dense(build_h(m, beta)) - dense(build_h0(m));
        const auto d = static_cast<Eigen::Index>(m.index_of(m.defect_site));
        for (Eigen::Index r = 0; r < diff.rows(); ++r) {
            for (Eigen::Index c = 0; c < diff.cols(); ++c) {
                const bool defect_entry = (r == d && (c == d - 1 || c == d + 1)) || (c == d && (r == d - 1 || r == d + 1));
                REQUIRE(diff(r, c) == (defect_entry ? -beta : 0.0));
            }
        }
    }
}

TEST_CASE("hermiticity and Gershgorin bound", "[hamiltonian][property]")
{
    std::mt19937_64 rng(17);
    std::normal_distribution<double> normal;
    for (double beta : {0.0, -2.5, -3.0, 1.7}) {
        for (std::size_t n : {3u, 9u, 33u, 63u}) {
            const auto h = build_h(lattice(n, 0.4), beta);

            std::vector<std::complex<double>> u(n), v(n);
            for (std::size_t i = 0; i < n; ++i) {
                u[i] = {normal(rng), normal(rng)};
                v[i] = {normal(rng), normal(rng)};
            }
            const auto hu = h.apply<std::complex<double>>(u);
            const auto hv = h.apply<std::complex<double>>(v);
            std::complex<double> lhs, rhs;
            for (std::size_t i = 0; i < n; ++i) {
                lhs += std::conj(u[i]) * hv[i];
                rhs += std::conj(hu[i]) * v[i];
            }
            REQUIRE(std::abs(lhs - rhs) <= 1e-12 * std::abs(lhs));

            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(dense(h));
            REQUIRE(solver.eigenvalues().cwiseAbs().maxCoeff() <= h.norm_bound() + 1e-12);
        }
    }
}

TEST_CASE("lattice validation", "[hamiltonian]")
{
    CHECK_THROWS_AS(build_h0(lattice(4)), std::invalid_argument);
    CHECK_THROWS_AS(build_h0(lattice(1)), std::invalid_argument);
    CHECK_THROWS_AS(build_h0(lattice(5, 0.0, 0.0)), std::invalid_argument);

    auto m = lattice(5);
    m.defect_site = 2; // bond (2,3) would leave the lattice
    CHECK_THROWS_AS(build_h(m, -2.5), std::invalid_argument);
    m.defect_site = -1;
    CHECK_NOTHROW(build_h(m, -2.5));
    CHECK_THROWS_AS(build_h(lattice(5), std::numeric_limits<double>::infinity()), std::invalid_argument);

    CHECK(lattice(7).index_of(0) == 3);
    CHECK(lattice(7).label_of(0) == -3);
    CHECK(required_sites(100.0) == 2 * (200 + 200) + 1);
    CHECK(required_sites(2000.0) == 8401);
    CHECK(required_sites(4000.0) == 16401);

    CHECK_THROWS_AS(TridiagonalOperator({0, 0}, {1, 1}), std::invalid_argument);
    CHECK_THROWS_AS(TridiagonalOperator({}, {}), std::invalid_argument);
}
