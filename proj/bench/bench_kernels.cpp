// Serial reference vs OpenMP kernels on a synthetic person-period design.
#include <benchmark/benchmark.h>
#include <omp.h>

#include "dtsurv/codec.hpp"
#include "dtsurv/ingestion.hpp"
#include "dtsurv/kernels.hpp"
#include "dtsurv/person_period.hpp"
#include "dtsurv/rng.hpp"
#include "dtsurv/synth.hpp"

using namespace dtsurv;
namespace k = dtsurv::kernels;

namespace {

struct Fixture {
  PersonPeriodTable table;
  EncodedRows rows;
  std::vector<std::uint8_t> y;
  std::vector<double> w, theta, hazards;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    SynthSpec spec;
    spec.n_enrollments = 20000;
    spec.effects = {{"inactive", 1.0}, {"recency", 0.1}};
    const auto raw = generate(spec).raw;
    Fixture out;
    out.table = build_person_period(build_backbone(raw).enrollments, raw);
    std::vector<std::size_t> all(out.table.rows());
    for (std::size_t r = 0; r < all.size(); ++r) all[r] = r;
    out.rows = fit_codec(out.table, all).transform(out.table, all);
    out.y = out.table.event;
    out.w.assign(all.size(), 1.0);
    Rng rng(1);
    out.theta.resize(1 + out.rows.width);
    for (auto& t : out.theta) t = 0.2 * (rng.uniform01() - 0.5);
    out.hazards.resize(all.size());
    for (auto& h : out.hazards) h = 0.1 * rng.uniform01();
    return out;
  }();
  return f;
}

void threads(benchmark::State& state) { omp_set_num_threads(int(state.range(0))); }

void BM_linear_serial(benchmark::State& state) {
  const auto& f = fixture();
  std::vector<double> out(f.rows.n_rows);
  for (auto _ : state) {
    k::serial::linear_scores(f.rows, f.theta, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * std::int64_t(f.rows.n_rows));
}

void BM_linear_parallel(benchmark::State& state) {
  const auto& f = fixture();
  threads(state);
  std::vector<double> out(f.rows.n_rows);
  for (auto _ : state) {
    k::parallel::linear_scores(f.rows, f.theta, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * std::int64_t(f.rows.n_rows));
}

void BM_logistic_serial(benchmark::State& state) {
  const auto& f = fixture();
  k::LogisticTerms t;
  for (auto _ : state) {
    k::serial::logistic_terms(f.rows, f.y, f.w, f.theta, true, t);
    benchmark::DoNotOptimize(t.loss);
  }
  state.SetItemsProcessed(state.iterations() * std::int64_t(f.rows.n_rows));
}

void BM_logistic_parallel(benchmark::State& state) {
  const auto& f = fixture();
  threads(state);
  k::LogisticTerms t;
  for (auto _ : state) {
    k::parallel::logistic_terms(f.rows, f.y, f.w, f.theta, true, t);
    benchmark::DoNotOptimize(t.loss);
  }
  state.SetItemsProcessed(state.iterations() * std::int64_t(f.rows.n_rows));
}

void BM_survival_serial(benchmark::State& state) {
  const auto& f = fixture();
  std::vector<double> out(f.hazards.size());
  for (auto _ : state) {
    k::serial::segment_survival(f.hazards, f.table.offsets, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * std::int64_t(f.hazards.size()));
}

void BM_survival_parallel(benchmark::State& state) {
  const auto& f = fixture();
  threads(state);
  std::vector<double> out(f.hazards.size());
  for (auto _ : state) {
    k::parallel::segment_survival(f.hazards, f.table.offsets, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * std::int64_t(f.hazards.size()));
}

}  // namespace

BENCHMARK(BM_linear_serial);
BENCHMARK(BM_linear_parallel)->Arg(1)->Arg(2)->Arg(4)->UseRealTime();
BENCHMARK(BM_logistic_serial);
BENCHMARK(BM_logistic_parallel)->Arg(1)->Arg(2)->Arg(4)->UseRealTime();
BENCHMARK(BM_survival_serial);
BENCHMARK(BM_survival_parallel)->Arg(1)->Arg(2)->Arg(4)->UseRealTime();

BENCHMARK_MAIN();
