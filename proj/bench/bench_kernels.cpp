// Serial reference kernels against their OpenMP counterparts on the demo
// corpus and a wide separable matrix. Prints best-of-N wall times.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "floodsignal/features.hpp"
#include "floodsignal/forest.hpp"
#include "floodsignal/ingest.hpp"
#include "floodsignal/synthgen.hpp"

using namespace floodsignal;

namespace {

double best_of(int reps, const std::function<void()>& body) {
    double best = 1e300;
    for (int i = 0; i < reps; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        body();
        best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return best;
}

void row(const char* name, double serial, double parallel, bool same) {
    std::printf("%-14s %10.4f %10.4f %8.2fx  %s\n", name, serial, parallel, serial / parallel,
                same ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
    const int reps = argc > 1 ? std::max(1, std::atoi(argv[1])) : 3;
#ifdef _OPENMP
    const int threads = omp_get_max_threads();
#else
    const int threads = 1;
#endif
    std::printf("threads %d, best of %d\n", threads, reps);
    std::printf("%-14s %10s %10s %9s\n", "kernel", "serial s", "openmp s", "speedup");

    const auto config = synth::load_config(std::string(FLOODSIGNAL_SOURCE_DIR) + "/configs/demo_synth.json");
    const auto corpus = synth::generate(config);
    const auto validity = day_validity(corpus.postings, config.window);
    const auto bundles = group_region_day(corpus.postings, validity);
    FeaturizeResult fs_serial, fs_parallel;
    const double f_ser = best_of(reps, [&] {
        fs_serial = serial::featurize(bundles, validity, corpus.regions, config.window, NormalizationPolicy::Consistent);
    });
    const double f_par = best_of(reps, [&] {
        fs_parallel = featurize(bundles, validity, corpus.regions, config.window, NormalizationPolicy::Consistent);
    });
    bool same = fs_serial.rows.size() == fs_parallel.rows.size();
    for (std::size_t i = 0; same && i < fs_serial.rows.size(); ++i)
        for (std::size_t k = 0; k < kFeatureCount; ++k) {
            const double a = fs_serial.rows[i].values[k], b = fs_parallel.rows[i].values[k];
            same = same && (a == b || (a != a && b != b));
        }
    row("featurize", f_ser, f_par, same);

    const auto data = synth::separable_dataset(4000, 5, 11).data;
    std::vector<double> a, b;
    const double s_ser = best_of(reps, [&] { a = serial::f_scores(data); });
    const double s_par = best_of(reps, [&] { b = f_scores(data); });
    row("f_scores", s_ser, s_par, a == b);

    ForestParams params;
    params.n_trees = 500;
    params.seed = 3;
    const auto selected = select_features(data, params.k_features);
    Forest fa, fb;
    const double t_ser = best_of(reps, [&] { fa = serial::train_forest(data, params, selected); });
    const double t_par = best_of(reps, [&] { fb = train_forest(data, params, selected); });
    row("train_forest", t_ser, t_par, fa == fb);

    const double p_ser = best_of(reps, [&] { a = serial::predict_batch(fa, data); });
    const double p_par = best_of(reps, [&] { b = predict_batch(fa, data); });
    row("predict_batch", p_ser, p_par, a == b);
    return 0;
}
