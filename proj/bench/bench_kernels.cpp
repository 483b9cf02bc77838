// Benchmark of the serial reference kernels against the OpenMP variants,
// plus an end-to-end training-step comparison. Prints a table of timings and
// effective GFLOP/s; run with OMP_NUM_THREADS set to taste.

#include <chrono>
#include <cstdio>
#include <string>

#include "synid/datagen.hpp"
#include "synid/kernels.hpp"
#include "synid/rng.hpp"
#include "synid/trainer.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace synid;
using Clock = std::chrono::steady_clock;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
    Matrix m(rows, cols);
    for (double& v : m.values()) v = rng.uniform(-1.0, 1.0);
    return m;
}

template <typename F>
double time_best_of(F&& fn, int repeats) {
    double best = 1e300;
    for (int r = 0; r < repeats; ++r) {
        const auto t0 = Clock::now();
        fn();
        const double dt = std::chrono::duration<double>(Clock::now() - t0).count();
        if (dt < best) best = dt;
    }
    return best;
}

void bench_matmul(std::size_t n, std::size_t k, std::size_t m) {
    Rng rng(1);
    const Matrix a = random_matrix(n, k, rng);
    const Matrix b = random_matrix(k, m, rng);
    Matrix out;

    const double flops = 2.0 * static_cast<double>(n) * static_cast<double>(k) *
                         static_cast<double>(m);
    const double ts = time_best_of([&] { kernels::matmul_serial(a, b, out); }, 5);
    const double tp = time_best_of([&] { kernels::matmul_parallel(a, b, out); }, 5);
    std::printf("matmul %4zux%-4zux%-4zu  serial %8.3f ms (%6.2f GF/s)  parallel %8.3f ms "
                "(%6.2f GF/s)  speedup %.2fx\n",
                n, k, m, ts * 1e3, flops / ts * 1e-9, tp * 1e3, flops / tp * 1e-9, ts / tp);
}

void bench_pair_scoring(std::size_t refs, std::size_t probes, std::size_t d) {
    Rng rng(2);
    const Matrix a = random_matrix(refs, d, rng);
    const Matrix b = random_matrix(probes, d, rng);
    Matrix out;
    const double flops = 2.0 * static_cast<double>(refs) * static_cast<double>(probes) *
                         static_cast<double>(d);
    kernels::set_parallel(false);
    const double ts = time_best_of([&] { kernels::cosine_matrix(a, b, out); }, 5);
    kernels::set_parallel(true);
    const double tp = time_best_of([&] { kernels::cosine_matrix(a, b, out); }, 5);
    std::printf("scores %4zux%-6zu d=%-3zu serial %8.3f ms (%6.2f GF/s)  parallel %8.3f ms "
                "(%6.2f GF/s)  speedup %.2fx\n",
                refs, probes, d, ts * 1e3, flops / ts * 1e-9, tp * 1e3, flops / tp * 1e-9,
                ts / tp);
}

void bench_train_epochs() {
    const LabeledDataset data = make_authentic(50, 20, 64, 0.3, 3);
    ModelConfig mc;
    mc.input_dim = 64;
    mc.hidden_dims = {48};
    mc.embedding_dim = 32;
    mc.init_seed = 4;

    OptimizerConfig opt;
    opt.epochs = 8;
    opt.milestones = {};
    opt.seed = 5;

    auto run = [&] {
        EmbeddingModel model = init_model(mc);
        ClassificationHead head = init_head(32, 50, 6);
        train(model, &head, data, Strategy::cls(), opt, nullptr);
    };
    kernels::set_parallel(false);
    const double ts = time_best_of(run, 3);
    kernels::set_parallel(true);
    const double tp = time_best_of(run, 3);
    std::printf("train  CLS 1000x8ep    serial %8.3f ms             parallel %8.3f ms"
                "             speedup %.2fx\n",
                ts * 1e3, tp * 1e3, ts / tp);
}

} // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP enabled, max threads = %d\n", omp_get_max_threads());
#else
    std::printf("built without OpenMP; parallel variants run serially\n");
#endif
    bench_matmul(64, 64, 64);
    bench_matmul(256, 64, 256);
    bench_matmul(1024, 64, 512);
    bench_pair_scoring(200, 6000, 32);
    bench_pair_scoring(1000, 10000, 64);
    bench_train_epochs();
    return 0;
}
