#include <random>

#include <benchmark/benchmark.h>

#include "hrigame/controllers.hpp"
#include "hrigame/riccati.hpp"
#include "hrigame/simulation.hpp"

namespace hrigame {
namespace {

Scenario desk(ControllerKind kind) {
  Scenario s;
  s.plant = ImpedanceParams::diagonal(1, 10.0, 25.0, 0.0);
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(2, 2);
  q.diagonal() << 1.0, 1e-4;
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(2, 2);
  const Eigen::MatrixXd r = Eigen::MatrixXd::Constant(1, 1, 5e-4);
  s.human = {q, zero, r};
  s.robot = {zero, q, r};
  s.refs.human = Eigen::Vector2d(1.0, 0.0);
  s.refs.robot = Eigen::Vector2d(0.5, 0.0);
  s.controller = kind;
  s.initial_state = State::zero(1);
  return s;
}

CareProblem random_problem(Eigen::Index n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const auto random = [&](Eigen::Index r, Eigen::Index c) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
    return m;
  };
  const Eigen::MatrixXd l = random(n, n);
  const Eigen::MatrixXd rl = random(1, 1);
  return {random(n, n), random(n, 1), l * l.transpose(),
          rl * rl.transpose() + 0.1 * Eigen::MatrixXd::Identity(1, 1)};
}

void BM_SolveCare(benchmark::State& state) {
  const CareProblem prob = random_problem(state.range(0), 3);
  for (auto _ : state) benchmark::DoNotOptimize(solve_care(prob));
}
BENCHMARK(BM_SolveCare)->Arg(2)->Arg(4)->Arg(8);

void BM_SolveCoupledCare(benchmark::State& state) {
  const StateSpace ss = build_state_space(ImpedanceParams::diagonal(1, 10.0, 25.0, 0.0));
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(2, 2);
  q.diagonal() << 0.5, 5e-5;
  const Eigen::MatrixXd r = Eigen::MatrixXd::Constant(1, 1, 5e-4);
  for (auto _ : state) benchmark::DoNotOptimize(solve_coupled_care(ss, q, q, r, r));
}
BENCHMARK(BM_SolveCoupledCare);

void BM_RunClosedLoop10s(benchmark::State& state) {
  const Scenario s = desk(static_cast<ControllerKind>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(run_closed_loop(s));
}
BENCHMARK(BM_RunClosedLoop10s)
    ->Arg(static_cast<int>(ControllerKind::cgt))
    ->Arg(static_cast<int>(ControllerKind::ncgt))
    ->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace hrigame
BENCHMARK_MAIN();
