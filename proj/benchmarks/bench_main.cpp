// Micro-benchmarks for the numeric kernels that dominate experiment runtime:
// the dense symmetric eigensolver, the moment contraction, the tensor power
// extraction and the per-step bandit selection.

#include <benchmark/benchmark.h>

#include <vector>

#include "lrb/features.hpp"
#include "lrb/linalg.hpp"
#include "lrb/moments.hpp"
#include "lrb/oful.hpp"
#include "lrb/rng.hpp"
#include "lrb/rtp.hpp"

using namespace lrb;

namespace {

SymMatrix random_sym(RngStream& stream, int dim) {
  SymMatrix m(dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j <= i; ++j) m.at(i, j) = stream.next_gaussian();
  return m;
}

void BM_SymEigTopk(benchmark::State& state) {
  RngStream stream(1);
  const int dim = static_cast<int>(state.range(0));
  const SymMatrix m = random_sym(stream, dim);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sym_eig_topk(m, 3));
  }
}
BENCHMARK(BM_SymEigTopk)->Arg(50)->Arg(200);

void BM_MomentContraction(benchmark::State& state) {
  RngStream stream(2);
  const int a = static_cast<int>(state.range(0));
  MomentEstimates est(a);
  std::vector<InteractionRecord> session(3);
  for (long n = 1; n <= 500; ++n) {
    for (int l = 0; l < 3; ++l)
      session[l] = InteractionRecord{n,    l + 1, 0, stream.next_below(a), stream.next_unit(),
                                     SessionKind::kExplore, 1.0};
    est.ingest_session(session);
  }
  Matrix w(a, 3);
  for (double& x : w.flat()) x = stream.next_gaussian();
  for (auto _ : state) {
    benchmark::DoNotOptimize(est.contracted_m3(w));
  }
}
BENCHMARK(BM_MomentContraction)->Arg(50)->Arg(200);

void BM_RtpDecompose(benchmark::State& state) {
  RngStream stream(3);
  const int dim = 5;
  const Matrix basis = sym_eig_topk(random_sym(stream, dim), dim).vectors;
  SymTensor3 t(dim);
  std::vector<double> col(dim);
  for (int c = 0; c < dim; ++c) {
    for (int i = 0; i < dim; ++i) col[i] = basis(i, c);
    t.add_rank1(col, 1.0 + c);
  }
  RtpConfig cfg;
  cfg.factors = dim;
  cfg.seed = 4;
  for (auto _ : state) {
    benchmark::DoNotOptimize(rtp_decompose(t, cfg));
  }
}
BENCHMARK(BM_RtpDecompose);

void BM_OfulSelect(benchmark::State& state) {
  RngStream stream(5);
  const int a = static_cast<int>(state.range(0));
  const int c = 3;
  OfulParams params;
  Matrix features(a, c);
  for (double& x : features.flat()) x = stream.next_unit();
  OfulState oful(c, params);
  for (int t = 0; t < 50; ++t)
    oful.update(features.row(stream.next_below(a)), stream.next_unit());
  for (auto _ : state) {
    benchmark::DoNotOptimize(oful.select(features, params));
  }
}
BENCHMARK(BM_OfulSelect)->Arg(50)->Arg(200);

}  // namespace

BENCHMARK_MAIN();
