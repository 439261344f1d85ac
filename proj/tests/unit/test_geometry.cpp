#include <doctest.h>

#include <psd/error.hpp>
#include <psd/geometry.hpp>

#include <sstream>

using namespace psd;
using namespace psd::geometry;
using grid::GaussianPacketParams;
using grid::GridSpec;
using grid::GridWavefunction;

namespace {

Eigen::VectorXd v1(double x) { return Eigen::VectorXd::Constant(1, x); }

}  // namespace

TEST_CASE("config metric") {
    const ConfigMetric m({1.0, 3.0}, 2);
    Eigen::VectorXd x(4), y(4);
    x << 0, 0, 1, 1;
    y << 1, 0, 1, 2;
    CHECK(m.distance2(x, y) == doctest::Approx((1.0 * 1 + 3.0 * 1) / 4.0));
    CHECK(m.distance(x, y) == doctest::Approx(m.distance(y, x)));
    CHECK(m.distance(x, x) == 0.0);
    CHECK(m.scaled(2.0).distance(x, y) == doctest::Approx(2.0 * m.distance(x, y)));
    CHECK_THROWS_AS(ConfigMetric({1.0, -1.0}), InvalidInput);
    CHECK_THROWS_AS(ConfigMetric({}), InvalidInput);
    CHECK_THROWS_AS(m.distance(v1(0), v1(1)), InvalidInput);
}

TEST_CASE("merging co-located particles") {
    const double m1 = 0.7, m2 = 2.2, a = 1.3, b = -0.4;
    const ConfigMetric two({m1, m2}), one({m1 + m2});
    CHECK(two.distance(Eigen::Vector2d(a, a), Eigen::Vector2d(b, b)) == doctest::Approx(one.distance(v1(a), v1(b))).epsilon(1e-15));
}

TEST_CASE("centroid and spread of grid packets") {
    const GridSpec g(4096, 320.0);
    GaussianPacketParams prm;
    prm.x0 = 7.25;
    const auto psi = grid::make_gaussian(prm, 1, g);
    CHECK(std::abs(centroid(psi) - 7.25) < g.dx());
    CHECK(spread(psi) == doctest::Approx(prm.sigma_x() / std::sqrt(2.0)).epsilon(1e-4));

    // translation and global phase
    prm.x0 = 7.25 + 10.0;
    const auto shifted = grid::make_gaussian(prm, 1, g);
    CHECK(std::abs(centroid(shifted) - centroid(psi) - 10.0) < g.dx());
    CHECK(spread(shifted) == doctest::Approx(spread(psi)).epsilon(1e-10));
    CHECK(spread(scale(psi, std::polar(1.0, 0.8))) == doctest::Approx(spread(psi)).epsilon(1e-12));

    // evolved packet: x(t) = t p0 / m, width sigma(t) / sqrt 2
    prm.x0 = 0.0;
    prm.p0 = 2.0;
    const auto moving = grid::make_gaussian(prm, 1, g);
    for (double t : {5.0, 12.0, 20.0}) {
        const auto s = grid::propagate_free(moving, t);
        CHECK(std::abs(centroid(s) - t * prm.p0) < 2 * g.dx());
        CHECK(spread(s) == doctest::Approx(grid::gaussian_width(prm, t) / std::sqrt(2.0)).epsilon(1e-4));
    }

    // symmetric pair
    prm.p0 = 0.0;
    prm.x0 = -30.0;
    const auto l = grid::make_gaussian(prm, 1, g);
    prm.x0 = 30.0;
    CHECK(std::abs(centroid(add(l, grid::make_gaussian(prm, 1, g)))) < g.dx());

    // single cell
    Eigen::VectorXcd c = Eigen::VectorXcd::Zero(4096);
    c[2000] = 1.0;
    const GridWavefunction spike(g, c);
    CHECK(spread(spike) < g.dx());
    CHECK_THROWS_AS(centroid(zero_like(psi)), InvalidInput);
}

TEST_CASE("general spread") {
    const GridSpec g(2048, 160.0);
    GaussianPacketParams prm;
    prm.x0 = 3.0;
    const auto psi = grid::make_gaussian(prm, 1, g);
    const auto m = position_measure(psi);
    const ConfigMetric e = ConfigMetric::euclidean(1);
    const SearchGrid box{v1(-80.0), v1(80.0)};

    const auto r = general_spread(m, e, box);
    CHECK(r.sigma == doctest::Approx(spread(psi)).epsilon(1e-6));
    CHECK(r.minimizer[0] == doctest::Approx(centroid(psi)).epsilon(1e-6));
    CHECK_FALSE(r.ambiguous);

    const auto rs = general_spread(m, e.scaled(3.0), box);
    CHECK(rs.sigma == doctest::Approx(3.0 * r.sigma).epsilon(1e-6));
    CHECK(rs.minimizer[0] == doctest::Approx(r.minimizer[0]).epsilon(1e-6));

    // bimodal at +-a
    const double a = 20.0;
    prm.x0 = -a;
    const auto l = grid::make_gaussian(prm, 1, g);
    prm.x0 = a;
    const auto bi = add(l, grid::make_gaussian(prm, 1, g));
    const auto rb = general_spread(position_measure(bi), e, box);
    CHECK(std::abs(rb.minimizer[0]) < 1e-6);
    CHECK(rb.sigma == doctest::Approx(std::sqrt(a * a + prm.sigma_x() * prm.sigma_x() / 2)).epsilon(1e-6));

    // L1 metric on the symmetric pair: tau is flat between the packets
    const MetricFn l1 = [](const Eigen::VectorXd& x, const Eigen::VectorXd& y) { return std::sqrt(std::abs(x[0] - y[0])); };
    CHECK(general_spread(position_measure(bi), l1, box).ambiguous);

    CHECK_THROWS_AS(general_spread(m, e, SearchGrid{v1(1.0), v1(0.0)}), InvalidInput);
    CHECK_THROWS_AS(general_spread(m, e, SearchGrid{Eigen::VectorXd(), Eigen::VectorXd()}), InvalidInput);
}

TEST_CASE("discrete measure centroid and spread") {
    const DiscreteScalarMeasure m(std::vector<double>{-1.0, 1.0, 3.0}, std::vector<double>{1.0, 1.0, 2.0});
    CHECK(centroid(m)[0] == doctest::Approx(1.5));
    CHECK(spread(m, ConfigMetric::euclidean(1)) == doctest::Approx(std::sqrt((6.25 + 0.25 + 2 * 2.25) / 4)));
}

namespace {

tree::SpatialTree<GridWavefunction> diverging_tree(const GridSpec& g, double t1, double t2) {
    GaussianPacketParams prm;
    prm.sigma_p = 0.5;
    std::vector<GridWavefunction> p;
    for (double p0 : {-3.0, -1.0, 1.0, 3.0}) {
        prm.p0 = p0;
        p.push_back(grid::make_gaussian(prm, 1, g));
    }
    const auto U = grid::free_propagator();
    GridWavefunction root = add(add(p[0], p[1]), add(p[2], p[3]));
    tree::SpatialTree<GridWavefunction> T{root, {}, U};
    T.nodes.push_back({t1, Decomposition<GridWavefunction>({U(add(p[0], p[1]), t1), U(add(p[2], p[3]), t1)}),
                       CoarseningMap{{0, 0}, 1}});
    std::vector<GridWavefunction> leaves;
    for (const auto& q : p) leaves.push_back(U(q, t2));
    T.nodes.push_back({t2, Decomposition<GridWavefunction>(leaves), CoarseningMap{{0, 0, 1, 1}, 2}});
    return T;
}

}  // namespace

TEST_CASE("branch trajectories of diverging packets") {
    const GridSpec g(4096, 400.0);
    const auto T = diverging_tree(g, 2.0, 4.0);
    REQUIRE(tree::validate_tree(T).valid);
    const auto bs = tree::branches(T, tree::BranchOptions{false});
    REQUIRE(bs.size() == 4);
    std::vector<double> times;
    for (int i = 0; i <= 40; ++i) times.push_back(0.5 * i);
    const double slopes[] = {-3.0, -1.0, 1.0, 3.0};
    for (const auto& b : bs) {
        const auto tr = branch_trajectory(T, b, times);
        for (std::size_t i = 0; i < times.size(); ++i) {
            if (times[i] < 4.0) continue;
            CHECK(std::abs(tr.x[i][0] - slopes[b.leaf] * times[i]) < 2 * g.dx());
        }
        CHECK(std::abs(tr.x[0][0]) < g.dx());
    }
    CHECK_THROWS_AS(branch_trajectory(T, bs[0], {1.0, 1.0}), InvalidInput);
}

TEST_CASE("stationary single-branch trajectory") {
    const GridSpec g(1024, 80.0);
    GaussianPacketParams prm;
    prm.x0 = 5.0;
    const auto psi = grid::make_gaussian(prm, 1, g);
    tree::SpatialTree<GridWavefunction> T{psi, {}, grid::free_propagator()};
    T.nodes.push_back({1.0, Decomposition<GridWavefunction>({grid::propagate_free(psi, 1.0)}), CoarseningMap{{0}, 1}});
    const auto bs = tree::branches(T);
    REQUIRE(bs.size() == 1);
    const auto tr = branch_trajectory(T, bs[0], {0.0, 1.0, 2.0, 3.0});
    for (const auto& x : tr.x) CHECK(std::abs(x[0] - 5.0) < g.dx());
}

TEST_CASE("trajectory csv") {
    std::vector<LabeledTrajectory> rows{{0, 0.5, {{0.0, 1.0}, {v1(0.0), v1(2.5)}}}, {1, 0.5, {{0.0}, {Eigen::Vector2d(1, 2)}}}};
    std::ostringstream os;
    write_trajectory_csv(os, rows);
    CHECK(os.str() == "t,x,branch_id,prob\n0,0,0,0.5\n1,2.5,0,0.5\n0,1;2,1,0.5\n");
}
