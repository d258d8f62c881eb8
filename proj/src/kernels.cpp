#include "selflearn/kernels.hpp"

#include <cmath>
#include <exception>

namespace selflearn {

namespace {

Vec item_gradient(const Model& model, const TrainItem& item, const LossSpec& loss,
                  std::uint64_t batch_key, std::size_t index, double& loss_out) {
    ForwardResult fwd = forward(model, *item.features);
    Rng rng = Rng::substream(batch_key, index);
    HeadGradient head = loss_grad(loss.kind, fwd.logits, fwd.logvar,
                                  model.lou_logsigma(item.language), item.label,
                                  loss.mc_samples, rng);
    loss_out = head.loss;
    Vec g(model.size(), 0.0);
    backward(model, *item.features, fwd, head, item.language, 1.0, g);
    return g;
}

TokenScore score_one(const Model& model, const ScoreItem& item, const EstimatorConfig& est,
                     std::uint64_t seed) {
    ForwardResult fwd = forward(model, *item.features);
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(item.stable_id),
                             static_cast<std::uint64_t>(item.token));
    Estimate e = estimate(est, fwd.logits, fwd.logvar, model.lou_logsigma(item.language), rng);
    return {std::move(e.probs), e.predicted, e.score};
}

}  // namespace

BatchGradient batch_gradient(const Model& model, std::span<const TrainItem> items,
                             const LossSpec& loss, std::uint64_t batch_key, Exec exec) {
    const std::size_t n = items.size();
    std::vector<Vec> grads(n);
    Vec losses(n, 0.0);
    if (exec == Exec::Serial) {
        for (std::size_t i = 0; i < n; ++i) grads[i] = item_gradient(model, items[i], loss, batch_key, i, losses[i]);
    } else {
        std::exception_ptr failure;
#pragma omp parallel for schedule(static)
        for (std::size_t i = 0; i < n; ++i) {
            try {
                grads[i] = item_gradient(model, items[i], loss, batch_key, i, losses[i]);
            } catch (...) {
#pragma omp critical
                if (!failure) failure = std::current_exception();
            }
        }
        if (failure) std::rethrow_exception(failure);
    }
    BatchGradient out;
    out.grad.assign(model.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        out.loss_sum += losses[i];
        for (std::size_t k = 0; k < out.grad.size(); ++k) out.grad[k] += grads[i][k];
    }
    return out;
}

std::vector<TokenScore> score_items(const Model& model, std::span<const ScoreItem> items,
                                    const EstimatorConfig& est, std::uint64_t seed, Exec exec) {
    std::vector<TokenScore> out(items.size());
    if (exec == Exec::Serial) {
        for (std::size_t i = 0; i < items.size(); ++i) out[i] = score_one(model, items[i], est, seed);
        return out;
    }
    std::exception_ptr failure;
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < items.size(); ++i) {
        try {
            out[i] = score_one(model, items[i], est, seed);
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

std::vector<ScoreItem> score_items_for(const std::vector<Example>& examples) {
    std::vector<ScoreItem> items;
    for (const auto& ex : examples) {
        for (std::size_t t = 0; t < ex.tokens.size(); ++t) {
            items.push_back({&ex.tokens[t], ex.language, ex.stable_id, static_cast<int>(t)});
        }
    }
    return items;
}

}  // namespace selflearn
