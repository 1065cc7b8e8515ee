#include <random>

#include <benchmark/benchmark.h>

#include "invar/overapprox.hpp"
#include "invar/sim.hpp"

namespace {

using namespace invar;

// Evidence built from a quadrotor trajectory of the requested length.
EvidenceSet quadrotor_evidence(int points) {
    const Plant plant = make_quadrotor();
    EvidenceSet ev(plant.declared_bounds, 1e3, Eigen::VectorXd::Zero(6));
    std::vector<DataPoint> data;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Eigen::VectorXd x(6);
    x << 0.0, 0.2, 0.0, -0.3, 0.0, 0.0;
    Eigen::VectorXd u(2);
    u << 6.13, 6.13;
    for (int i = 0; i < points; ++i) {
        u(0) = 6.13 + unif(rng);
        u(1) = 6.13 + unif(rng);
        data.push_back({x, plant.derivative(x, u), u, 0.1 * i});
        for (int s = 0; s < 100; ++s) x = rk4_step(plant, x, u, 1e-3);
    }
    return approximate(data, std::move(ev));
}

void BM_Cover(benchmark::State& state) {
    const EvidenceSet ev = quadrotor_evidence(static_cast<int>(state.range(0)));
    Eigen::VectorXd x(6);
    x << 0.1, 0.1, 0.05, -0.2, 0.1, 0.0;
    for (auto _ : state) benchmark::DoNotOptimize(cover(x, ev));
}
BENCHMARK(BM_Cover)->Arg(8)->Arg(32)->Arg(85);

void BM_ApproximateIncremental(benchmark::State& state) {
    const int points = static_cast<int>(state.range(0));
    const Plant plant = make_quadrotor();
    std::vector<DataPoint> data;
    Eigen::VectorXd x(6);
    x << 0.0, 0.2, 0.0, -0.3, 0.0, 0.0;
    Eigen::VectorXd u(2);
    u << 6.2, 6.0;
    for (int i = 0; i <= points; ++i) {
        data.push_back({x, plant.derivative(x, u), u, 0.1 * i});
        for (int s = 0; s < 100; ++s) x = rk4_step(plant, x, u, 1e-3);
    }
    std::span<const DataPoint> prefix(data.data(), data.size() - 1);
    const EvidenceSet base =
        approximate(prefix, EvidenceSet(plant.declared_bounds, 1e3, Eigen::VectorXd::Zero(6)));
    for (auto _ : state) {
        EvidenceSet ev = base;
        benchmark::DoNotOptimize(ev = approximate(data, std::move(ev)));
    }
}
BENCHMARK(BM_ApproximateIncremental)->Arg(8)->Arg(32)->Arg(85);

void BM_Rk4Step(benchmark::State& state) {
    const Plant plant = make_quadrotor();
    Eigen::VectorXd x(6);
    x << 0.0, 0.2, 0.0, -0.3, 0.0, 0.0;
    Eigen::VectorXd u(2);
    u << 6.13, 6.13;
    for (auto _ : state) benchmark::DoNotOptimize(x = rk4_step(plant, x, u, 1e-3));
}
BENCHMARK(BM_Rk4Step);

void BM_PredictNextState(benchmark::State& state) {
    const EvidenceSet ev = quadrotor_evidence(32);
    Eigen::VectorXd x(6);
    x << 0.1, 0.1, 0.05, -0.2, 0.1, 0.0;
    IntervalVector u_set{Interval(5.5, 6.8), Interval(5.5, 6.8)};
    for (auto _ : state) benchmark::DoNotOptimize(predict_next_state(x, u_set, 0.01, ev));
}
BENCHMARK(BM_PredictNextState);

} // namespace

BENCHMARK_MAIN();
