#include <benchmark/benchmark.h>

#include <random>

#include "sigfolio/backtest.hpp"
#include "sigfolio/path.hpp"
#include "sigfolio/qp.hpp"
#include "sigfolio/signature.hpp"

using namespace sigfolio;

namespace {

DiscretePath make_path(int samples, int dim) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal(0.0, 0.02);
  std::vector<double> times(static_cast<std::size_t>(samples));
  Eigen::MatrixXd values(samples, dim);
  for (int k = 0; k < samples; ++k) {
    times[static_cast<std::size_t>(k)] = static_cast<double>(k);
    for (int j = 0; j < dim; ++j) values(k, j) = (k == 0 ? 0.0 : values(k - 1, j)) + normal(rng);
  }
  return DiscretePath(std::move(times), std::move(values));
}

void BM_SignatureStream(benchmark::State& state) {
  const DiscretePath path = make_path(static_cast<int>(state.range(0)), 4);
  for (auto _ : state) {
    SignatureStream stream(path, 3);
    benchmark::DoNotOptimize(stream.final().scalar());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SignatureStream)->Arg(256)->Arg(1024)->Arg(4096);

void BM_TensorMul(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const int d = static_cast<int>(state.range(0));
  TruncatedTensor a = TruncatedTensor::unit(d, 3);
  TruncatedTensor b = TruncatedTensor::unit(d, 3);
  for (int k = 1; k <= 3; ++k) {
    for (double& x : a.level_data(k)) x = uni(rng);
    for (double& x : b.level_data(k)) x = uni(rng);
  }
  for (auto _ : state) {
    TruncatedTensor c = tensor_mul(a, b);
    benchmark::DoNotOptimize(c.scalar());
  }
}
BENCHMARK(BM_TensorMul)->Arg(4)->Arg(8);

void BM_Shuffle(benchmark::State& state) {
  const Word a{1, 2, 1};
  const Word b{2, 1, 2};
  for (auto _ : state) {
    WordSum s = shuffle(a, b);
    benchmark::DoNotOptimize(s.size());
  }
}
BENCHMARK(BM_Shuffle);

void BM_AssembleLogOpt(benchmark::State& state) {
  const int R = static_cast<int>(state.range(0));
  const DiscretePath path = make_path(R + 1, 3);
  Eigen::MatrixXd mu(R + 1, 3);
  for (int k = 0; k <= R; ++k) {
    const Eigen::Vector3d p = path.values.row(k).transpose().array().exp().matrix();
    mu.row(k) = p.transpose() / p.sum();
  }
  const FeatureMatrix fm = signature_features(time_augment(DiscretePath(path.times, mu), 1.0), 3);
  const Eigen::MatrixXd features = fm.values.topRows(R);
  for (auto _ : state) {
    auto qc = assemble_logopt(features, mu, PortfolioType::type1);
    benchmark::DoNotOptimize(qc.first(0, 0));
  }
  state.SetItemsProcessed(state.iterations() * R);
}
BENCHMARK(BM_AssembleLogOpt)->Arg(1000)->Arg(10000);

void BM_SolveBoxQp(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = normal(rng);
  QpProblem p;
  p.Q = a * a.transpose() + 1e-6 * Eigen::MatrixXd::Identity(n, n);
  p.c.resize(n);
  for (int i = 0; i < n; ++i) p.c[i] = normal(rng);
  p.bounds = Eigen::VectorXd::Constant(n, 0.5);
  for (auto _ : state) {
    QpSolution sol = solve_qp(p);
    benchmark::DoNotOptimize(sol.l[0]);
  }
}
BENCHMARK(BM_SolveBoxQp)->Arg(64)->Arg(255);

void BM_RebalanceAlpha(benchmark::State& state) {
  Eigen::Vector3d prev(5.0, 6.0, -10.0), target(5.5, 6.5, -11.0);
  for (auto _ : state) {
    TcOutcome out = solve_rebalance_alpha(prev, target, 0.05);
    benchmark::DoNotOptimize(out.alpha);
  }
}
BENCHMARK(BM_RebalanceAlpha);

void BM_Backtest(benchmark::State& state) {
  const int R = static_cast<int>(state.range(0));
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal(0.0, 0.01);
  std::uniform_real_distribution<double> uni(0.1, 1.0);
  Eigen::MatrixXd prices(R + 1, 3);
  prices.row(0).setConstant(1.0);
  for (int t = 1; t <= R; ++t)
    for (int j = 0; j < 3; ++j) prices(t, j) = prices(t - 1, j) * std::exp(normal(rng));
  Eigen::MatrixXd weights(R, 3);
  for (int t = 0; t < R; ++t) {
    for (int j = 0; j < 3; ++j) weights(t, j) = uni(rng);
    weights.row(t) /= weights.row(t).sum();
  }
  for (auto _ : state) {
    BacktestReport report = run_backtest(weights, prices, 0.01);
    benchmark::DoNotOptimize(report.log_wealth_final);
  }
  state.SetItemsProcessed(state.iterations() * R);
}
BENCHMARK(BM_Backtest)->Arg(750)->Arg(2000);

}  // namespace

BENCHMARK_MAIN();
