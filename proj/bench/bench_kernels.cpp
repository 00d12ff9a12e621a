// OpenMP kernels against their serial references. Thread count follows ILLUMOPT_THREADS.
#include <benchmark/benchmark.h>

#include "illumopt/fem.hpp"
#include "illumopt/forward.hpp"
#include "illumopt/kernels.hpp"

using namespace illumopt;

namespace {

const MeshGrid& mesh15() {
    static const MeshGrid m = make_mesh({15, 15, 15}, 1.0);
    return m;
}

template <auto Kernel>
void BM_elements(benchmark::State& state) {
    const MeshGrid& m = mesh15();
    const Vec kappa = Vec::Constant(m.num_nodes(), 1.0 / 3.03);
    const Vec mu_a = Vec::Constant(m.num_nodes(), 0.01);
    kernels::ElementMatrices out;
    for (auto _ : state) {
        Kernel(m, kappa, mu_a, out);
        benchmark::DoNotOptimize(out.stiffness.data());
    }
    state.SetItemsProcessed(state.iterations() * m.num_tets());
}

template <auto Kernel>
void BM_gemv(benchmark::State& state) {
    const Index rows = state.range(0);
    const Mat a = Mat::Random(rows, 4096);
    const Vec x = Vec::Random(4096);
    Vec y;
    for (auto _ : state) {
        Kernel(a, x, y);
        benchmark::DoNotOptimize(y.data());
    }
    state.SetBytesProcessed(state.iterations() * a.size() * static_cast<Index>(sizeof(double)));
}

template <auto Kernel>
void BM_gemv_t(benchmark::State& state) {
    const Index rows = state.range(0);
    const Mat a = Mat::Random(rows, 4096);
    const Vec y = Vec::Random(rows);
    Vec x;
    for (auto _ : state) {
        Kernel(a, y, x);
        benchmark::DoNotOptimize(x.data());
    }
    state.SetBytesProcessed(state.iterations() * a.size() * static_cast<Index>(sizeof(double)));
}

template <auto Kernel>
void BM_gamma(benchmark::State& state) {
    const MeshGrid& m = mesh15();
    const DetectorPlane det = centered_detector(m);
    kernels::GammaInputs in;
    in.pixels = det.pixel_centers(m.dims[2]);
    const Vec areas = top_area_shares(m);
    for (Index i : m.allowed_nodes()) {
        in.nodes.push_back(m.nodes[i]);
        in.areas.push_back(areas[i]);
    }
    in.cos_min = std::cos(det.acceptance_deg * M_PI / 180.0);
    Mat g;
    for (auto _ : state) {
        Kernel(in, g);
        benchmark::DoNotOptimize(g.data());
    }
}

template <auto Kernel>
void BM_born(benchmark::State& state) {
    const Mat pe = Mat::Random(100, 1800).cwiseAbs();
    const Mat pf = Mat::Random(100, 1800).cwiseAbs();
    Mat y;
    kernels::MaskArray mask;
    for (auto _ : state) {
        Kernel(pf, pe, 1e-12, y, mask);
        benchmark::DoNotOptimize(y.data());
    }
}

}  // namespace

BENCHMARK(BM_elements<kernels::serial::element_matrices>)->Name("element_matrices/serial");
BENCHMARK(BM_elements<kernels::omp::element_matrices>)->Name("element_matrices/omp");
BENCHMARK(BM_gemv<kernels::serial::gemv>)->Name("gemv/serial")->Arg(2000)->Arg(20000);
BENCHMARK(BM_gemv<kernels::omp::gemv>)->Name("gemv/omp")->Arg(2000)->Arg(20000);
BENCHMARK(BM_gemv_t<kernels::serial::gemv_t>)->Name("gemv_t/serial")->Arg(2000)->Arg(20000);
BENCHMARK(BM_gemv_t<kernels::omp::gemv_t>)->Name("gemv_t/omp")->Arg(2000)->Arg(20000);
BENCHMARK(BM_gamma<kernels::serial::gamma_dense>)->Name("gamma_dense/serial");
BENCHMARK(BM_gamma<kernels::omp::gamma_dense>)->Name("gamma_dense/omp");
BENCHMARK(BM_born<kernels::serial::born_ratio>)->Name("born_ratio/serial");
BENCHMARK(BM_born<kernels::omp::born_ratio>)->Name("born_ratio/omp");

BENCHMARK_MAIN();
