#include <psd/decomposition.hpp>
#include <psd/finite.hpp>
#include <psd/grid.hpp>
#include <psd/partition_search.hpp>
#include <psd/proximity.hpp>

#include <benchmark/benchmark.h>

#include <random>

using namespace psd;

namespace {

grid::GridWavefunction packet(std::size_t n, int sign) {
    grid::GaussianPacketParams p;
    p.p0 = 2.0;
    return grid::make_gaussian(p, sign, grid::GridSpec(n, 0.03125 * static_cast<double>(n)));
}

void BM_PropagateFree(benchmark::State& st) {
    const auto psi = packet(static_cast<std::size_t>(st.range(0)), 1);
    for (auto _ : st) benchmark::DoNotOptimize(grid::propagate_free(psi, 1.0));
    st.SetComplexityN(st.range(0));
}
BENCHMARK(BM_PropagateFree)->RangeMultiplier(4)->Range(1 << 10, 1 << 18)->Complexity(benchmark::oNLogN);

void BM_Strang(benchmark::State& st) {
    const auto psi = packet(4096, 1);
    const Eigen::VectorXd V = -2.0 * (psi.grid().positions().array().cosh().inverse().square()).matrix();
    const grid::StrangPropagator U(V, 0.01);
    for (auto _ : st) benchmark::DoNotOptimize(U(psi, 0.01 * static_cast<double>(st.range(0))));
}
BENCHMARK(BM_Strang)->Arg(10)->Arg(100);

void BM_WTwoSpatial(benchmark::State& st) {
    const auto a = packet(static_cast<std::size_t>(st.range(0)), 1), b = packet(static_cast<std::size_t>(st.range(0)), -1);
    for (auto _ : st) benchmark::DoNotOptimize(w_two_spatial(a, b));
}
BENCHMARK(BM_WTwoSpatial)->RangeMultiplier(4)->Range(1 << 10, 1 << 16);

struct FiniteCase {
    finite::AtomicSpectralMeasure G;
    Decomposition<finite::StateVector> D;
};

FiniteCase finite_case(int atoms, int n) {
    std::mt19937_64 eng(42);
    std::normal_distribution<double> nd;
    auto vec = [&] {
        Eigen::VectorXcd v(atoms);
        for (int i = 0; i < atoms; ++i) v[i] = {nd(eng), nd(eng)};
        return v;
    };
    std::vector<finite::StateVector> e;
    for (int i = 0; i < n; ++i) e.emplace_back(vec());
    return {finite::AtomicSpectralMeasure::coordinate(static_cast<std::size_t>(atoms)), Decomposition<finite::StateVector>(e)};
}

void BM_BruteForce(benchmark::State& st) {
    const auto c = finite_case(static_cast<int>(st.range(0)), 3);
    for (auto _ : st) benchmark::DoNotOptimize(finite::brute_force_w(c.G, c.D));
}
BENCHMARK(BM_BruteForce)->DenseRange(6, 14, 2);

void BM_Heuristic(benchmark::State& st) {
    const auto c = finite_case(static_cast<int>(st.range(0)), 3);
    const auto table = finite::cell_table(c.G, c.D);
    for (auto _ : st) benchmark::DoNotOptimize(heuristic_partition(table));
}
BENCHMARK(BM_Heuristic)->DenseRange(6, 14, 2);

}  // namespace

BENCHMARK_MAIN();
