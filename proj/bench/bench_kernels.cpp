// Serial vs OpenMP timing of the two hot kernels on the desk-NER pool.
#include <chrono>
#include <cstdio>
#include <cstdlib>

#include <omp.h>

#include "selflearn/kernels.hpp"
#include "selflearn/synthdata.hpp"

using namespace selflearn;

namespace {

template <class F>
double best_ms(int reps, F&& f) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        auto t0 = std::chrono::steady_clock::now();
        f();
        auto t1 = std::chrono::steady_clock::now();
        best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return best;
}

}  // namespace

int main(int argc, char** argv) {
    const int reps = argc > 1 ? std::atoi(argv[1]) : 5;
    SynthConfig sc = desk_tagging_config(7);
    Pool pool = generate(sc, desk_tagging_shifts(sc));

    Rng rng(7);
    ModelShape shape{sc.dim, 32, pool.labels.size(), pool.num_languages(), Activation::Tanh};
    Model model = Model::initialized(shape, rng);

    std::vector<const Example*> train;
    for (const auto& ex : pool.data[static_cast<std::size_t>(pool.source)].train) train.push_back(&ex);
    auto items = flatten_items(train);
    std::vector<ScoreItem> unl;
    for (int t : pool.targets()) {
        auto s = score_items_for(pool.data[static_cast<std::size_t>(t)].unlabeled);
        unl.insert(unl.end(), s.begin(), s.end());
    }

    std::printf("threads %d, train tokens %zu, unlabeled tokens %zu\n", omp_get_max_threads(), items.size(),
                unl.size());
    std::printf("%-28s %10s %10s %8s\n", "kernel", "serial ms", "omp ms", "same");

    for (LossKind k : {LossKind::CrossEntropy, LossKind::Heteroscedastic, LossKind::Evidential}) {
        LossSpec loss{k, 20};
        BatchGradient a, b;
        double ts = best_ms(reps, [&] { a = batch_gradient(model, items, loss, 11, Exec::Serial); });
        double tp = best_ms(reps, [&] { b = batch_gradient(model, items, loss, 11, Exec::Parallel); });
        bool same = a.loss_sum == b.loss_sum && a.grad == b.grad;
        std::printf("grad %-23s %10.2f %10.2f %8s\n", to_string(k).c_str(), ts, tp, same ? "yes" : "NO");
    }
    for (EstimatorKind k : {EstimatorKind::MPR, EstimatorKind::LEU, EstimatorKind::EVI}) {
        EstimatorConfig est;
        est.kind = k;
        std::vector<TokenScore> a, b;
        double ts = best_ms(reps, [&] { a = score_items(model, unl, est, 5, Exec::Serial); });
        double tp = best_ms(reps, [&] { b = score_items(model, unl, est, 5, Exec::Parallel); });
        bool same = a.size() == b.size();
        for (std::size_t i = 0; same && i < a.size(); ++i) {
            same = a[i].probs == b[i].probs && a[i].score.gamma == b[i].score.gamma;
        }
        std::printf("score %-22s %10.2f %10.2f %8s\n", to_string(k).c_str(), ts, tp, same ? "yes" : "NO");
    }
    return 0;
}
