#include <doctest.h>

#include "support/oracles.hpp"

#include <psd/error.hpp>
#include <psd/grid.hpp>
#include <psd/special.hpp>

#include <sstream>

using namespace psd;
using namespace psd::grid;

namespace {

double grid_norm2(const GridWavefunction& psi) { return psi.density().sum() * psi.grid().dx(); }

double grid_centroid(const GridWavefunction& psi) {
    const auto d = psi.density();
    return (d.array() * psi.grid().positions().array()).sum() / d.sum();
}

}  // namespace

TEST_CASE("grid spec layout") {
    const GridSpec g(16, 8.0, 1.0);
    CHECK(g.dx() == 0.5);
    CHECK(g.x(0) == -3.0);
    CHECK(g.p(0, 1.0) == 0.0);
    CHECK(g.p(1, 1.0) == doctest::Approx(2 * M_PI / 8.0));
    CHECK(g.p(15, 1.0) == doctest::Approx(-2 * M_PI / 8.0));
    CHECK(g.p(8, 1.0) == doctest::Approx(-M_PI / 0.5));
    CHECK_THROWS_AS(GridSpec(100, 1.0), InvalidInput);
    CHECK_THROWS_AS(GridSpec(8, 1.0), InvalidInput);
    CHECK_THROWS_AS(GridSpec(64, -1.0), InvalidInput);
}

TEST_CASE("gaussian packet normalization and momentum peak") {
    const GridSpec g(4096, 320.0);
    GaussianPacketParams prm;
    prm.p0 = 2.0;
    prm.sigma_p = 1.0;
    for (int sign : {1, -1}) {
        const auto psi = make_gaussian(prm, sign, g);
        CHECK(grid_norm2(psi) == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(std::abs(grid_centroid(psi)) < 1e-10);
        const auto phi = psi.momentum_density();
        const double dp = g.dp(1.0);
        CHECK(phi.sum() * dp == doctest::Approx(1.0).epsilon(1e-10));
        Eigen::Index jmax;
        phi.maxCoeff(&jmax);
        CHECK(g.p(static_cast<std::size_t>(jmax), 1.0) == doctest::Approx(sign * prm.p0).epsilon(1e-2));
        // exact grid momentum sign*p0 exists since 2 = 2 pi k / 320 is not a grid point; use the oracle
        const oracle::Packet pk{prm.p0, prm.sigma_p};
        double worst = 0.0;
        for (Eigen::Index j = 0; j < phi.size(); ++j)
            worst = std::max(worst, std::abs(phi[j] - pk.momentum_density(g.p(static_cast<std::size_t>(j), 1.0), sign)));
        CHECK(worst < 1e-4);
        CHECK(phi.maxCoeff() == doctest::Approx(1.0 / (std::sqrt(M_PI) * prm.sigma_p)).epsilon(1e-4));
    }
}

TEST_CASE("gaussian resolution checks") {
    GaussianPacketParams prm;
    prm.p0 = 2.0;
    CHECK_THROWS_AS(make_gaussian(prm, 1, GridSpec(64, 320.0)), ResolutionError);  // dx too coarse
    CHECK_THROWS_AS(make_gaussian(prm, 1, GridSpec(4096, 10.0)), ResolutionError);  // box too small
    prm.p0 = 200.0;
    CHECK_THROWS_AS(make_gaussian(prm, 1, GridSpec(1024, 128.0)), ResolutionError);  // momentum cutoff
    prm.p0 = 2.0;
    prm.x0 = 158.0;
    CHECK_THROWS_AS(make_gaussian(prm, 1, GridSpec(4096, 320.0)), ResolutionError);  // too close to the edge
}

TEST_CASE("momentum samples round trip") {
    const GridSpec g(512, 40.0, 3.0);
    GaussianPacketParams prm;
    prm.p0 = 1.5;
    prm.x0 = 4.0;
    const auto psi = make_gaussian(prm, 1, g);
    const auto back = GridWavefunction::from_momentum_samples(g, psi.momentum_samples());
    CHECK((back.coefficients() - psi.coefficients()).norm() < 1e-12);
}

TEST_CASE("free propagation") {
    const GridSpec g(4096, 400.0);
    GaussianPacketParams prm;
    prm.p0 = 2.0;
    const auto psi = make_gaussian(prm, 1, g);

    CHECK((propagate_free(psi, 0.0).coefficients() - psi.coefficients()).norm() == 0.0);

    const auto rt = propagate_free(propagate_free(psi, 7.5), -7.5);
    CHECK((rt.coefficients() - psi.coefficients()).norm() * std::sqrt(g.dx()) < 1e-12);

    const auto a = propagate_free(propagate_free(psi, 3.0), 4.5);
    const auto b = propagate_free(psi, 7.5);
    CHECK((a.coefficients() - b.coefficients()).norm() * std::sqrt(g.dx()) < 1e-12);

    auto cur = psi;
    for (int i = 0; i < 1000; ++i) cur = propagate_free(cur, 0.01);
    CHECK(std::abs(grid_norm2(cur) - 1.0) < 1e-10);
}

TEST_CASE("free density follows the spreading envelope") {
    const GridSpec g(4096, 320.0);
    GaussianPacketParams prm;
    prm.p0 = 2.0;
    const oracle::Packet pk{prm.p0, prm.sigma_p};
    for (int sign : {1, -1}) {
        const auto psi = make_gaussian(prm, sign, g);
        for (double t : {0.0, 5.0, 20.0}) {
            const auto d = propagate_free(psi, t).density();
            double worst = 0.0;
            for (std::size_t k = 0; k < g.n_cells(); ++k)
                worst = std::max(worst, std::abs(d[static_cast<Eigen::Index>(k)] - pk.density(g.x(k), t, sign)));
            CAPTURE(t);
            CHECK(worst < 1e-4);
        }
    }
}

TEST_CASE("strang propagation") {
    const GridSpec g(1024, 80.0);
    GaussianPacketParams prm;
    prm.p0 = 1.0;
    const auto psi = make_gaussian(prm, 1, g);

    SUBCASE("zero potential matches free") {
        const auto s = propagate_potential(psi, Eigen::VectorXd::Zero(1024), 0.01, 500);
        const auto f = propagate_free(psi, 5.0);
        CHECK((s.coefficients() - f.coefficients()).norm() * std::sqrt(g.dx()) < 1e-8);
    }
    SUBCASE("constant potential is a global phase") {
        const double c = 0.37;
        const auto s = propagate_potential(psi, Eigen::VectorXd::Constant(1024, c), 0.01, 300);
        const auto f = propagate_free(psi, 3.0);
        CHECK((s.density() - f.density()).cwiseAbs().maxCoeff() < 1e-10);
        const Eigen::VectorXcd phased = f.coefficients() * std::exp(cplx(0.0, -c * 3.0));
        CHECK((s.coefficients() - phased).norm() * std::sqrt(g.dx()) < 1e-9);
    }
    SUBCASE("norm drift over 1000 steps") {
        Eigen::VectorXd V = -2.0 * (g.positions().array() / 1.5).cosh().inverse().square();
        const auto s = propagate_potential(psi, V, 0.01, 1000);
        CHECK(std::abs(grid_norm2(s) - 1.0) < 1e-10);
    }
    SUBCASE("harmonic oscillator centroid") {
        // coherent state: sigma_x = sqrt(hbar / (m omega)) = 1 with omega = 1
        GaussianPacketParams h;
        h.p0 = 0.0;
        h.x0 = 2.0;
        const auto c0 = make_gaussian(h, 1, g);
        const Eigen::VectorXd V = 0.5 * g.positions().array().square();
        const StrangPropagator U(V, 0.005);
        double worst = 0.0;
        for (int i = 1; i <= 16; ++i) {
            const double t = 2 * M_PI * i / 16.0;
            worst = std::max(worst, std::abs(grid_centroid(U(c0, t)) - 2.0 * std::cos(t)));
        }
        CHECK(worst < 1e-3 * 2.0);
    }
    SUBCASE("errors") {
        Eigen::VectorXd V = Eigen::VectorXd::Zero(1024);
        V[3] = std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS_AS(propagate_potential(psi, V, 0.01, 1), InvalidInput);
        CHECK_THROWS_AS(propagate_potential(psi, Eigen::VectorXd::Zero(1024), 0.01, 0), InvalidInput);
        CHECK_THROWS_AS(propagate_potential(psi, Eigen::VectorXd::Zero(10), 0.01, 1), InvalidInput);
    }
}

TEST_CASE("projections") {
    const GridSpec g(4096, 320.0);
    GaussianPacketParams prm;
    prm.p0 = 2.0;
    const auto plus = make_gaussian(prm, 1, g);
    const auto minus = make_gaussian(prm, -1, g);
    const auto psi = add(plus, minus);

    const auto all = RegionMask::all(Representation::position, g.n_cells());
    CHECK((position_project(psi, all).coefficients() - psi.coefficients()).norm() == 0.0);

    const auto right = RegionMask::from_predicate(g, Representation::position, 1.0, [](double x) { return x > 0.3; });
    const auto a = position_project(psi, right), b = position_project(psi, right.complement());
    CHECK(norm2(a) + norm2(b) == doctest::Approx(norm2(psi)).epsilon(1e-13));
    CHECK((position_project(a, right).coefficients() - a.coefficients()).norm() == 0.0);

    const auto pos = RegionMask::from_predicate(g, Representation::momentum, 1.0, [](double p) { return p >= 0.0; });
    const auto pa = momentum_project(psi, pos), pb = momentum_project(psi, pos.complement());
    CHECK(norm2(pa) + norm2(pb) == doctest::Approx(norm2(psi)).epsilon(1e-12));
    CHECK((momentum_project(pa, pos).coefficients() - pa.coefficients()).norm() * std::sqrt(g.dx()) < 1e-12);
    // || F(p>=0)(Psi+ + Psi-) - Psi+ ||^2 = ||F(p<0)Psi+||^2 + ||F(p>=0)Psi-||^2 = erfc(p0/sigma_p)
    const double err = norm(subtract(pa, plus));
    CHECK(err == doctest::Approx(oracle::kSqrtErfc2).epsilon(2e-3));

    CHECK_THROWS_AS(position_project(psi, RegionMask::all(Representation::position, 16)), InvalidInput);
}

TEST_CASE("separation ratio f(t)") {
    GaussianPacketParams prm;
    prm.p0 = 2.0;
    const oracle::Packet pk{prm.p0, prm.sigma_p};
    CHECK(gaussian_separation_ratio(prm, 0.0) == 0.0);
    double prev = -1.0;
    for (int i = 0; i <= 200; ++i) {
        const double t = 0.05 * i;
        const double f = gaussian_separation_ratio(prm, t);
        CHECK(f > prev);
        CHECK(f <= 2.0);
        CHECK(f == doctest::Approx(pk.ratio(t)).epsilon(1e-14));
        prev = f;
    }
    CHECK(analytic_gaussian_wE(prm, 0.0) == 1.0);
    CHECK(analytic_gaussian_wE(prm, 1e9) == doctest::Approx(oracle::kSqrtErfc2).epsilon(1e-12));
    CHECK_THROWS_AS(analytic_gaussian_wE(prm, -1.0), InvalidInput);

    prm.p0 = 10.0;
    CHECK(std::exp(log_analytic_gaussian_wE(prm, 1e12)) == doctest::Approx(oracle::kSqrtErfc10).epsilon(1e-10));
    CHECK(gaussian_width(prm, 0.0) == doctest::Approx(1.0));
}

TEST_CASE("log_erfc") {
    CHECK(log_erfc(10.0) == doctest::Approx(oracle::kLogErfc10).epsilon(1e-14));
    CHECK(log_erfc(5.0) == doctest::Approx(oracle::kLogErfc5).epsilon(1e-14));
    CHECK(std::exp(log_erfc(2.0)) == doctest::Approx(oracle::kErfc2).epsilon(1e-14));
    // continuity across the asymptotic switch
    CHECK(log_erfc(20.0 - 1e-9) == doctest::Approx(log_erfc(20.0)).epsilon(1e-10));
    CHECK(std::isfinite(log_erfc(40.0)));
}

TEST_CASE("wrap warning and snapshot") {
    const GridSpec g(512, 40.0);
    GaussianPacketParams prm;
    prm.p0 = 2.0;
    const auto psi = make_gaussian(prm, 1, g);
    CHECK_FALSE(wrap_warning(psi).has_value());
    CHECK(wrap_warning(propagate_free(psi, 9.0)).has_value());

    std::ostringstream os;
    write_snapshot_csv(os, psi);
    const std::string s = os.str();
    CHECK(s.rfind("x,re,im,density\n", 0) == 0);
    CHECK(std::count(s.begin(), s.end(), '\n') == 513);
}
