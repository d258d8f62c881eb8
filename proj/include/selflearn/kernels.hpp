#pragma once

// Data-parallel kernels. Each kernel has a serial reference path and an
// OpenMP path; both produce bit-identical results because every item draws
// noise from its own substream and reductions are summed in item order.

#include <cstdint>
#include <span>
#include <vector>

#include "selflearn/classifier.hpp"
#include "selflearn/estimators.hpp"

namespace selflearn {

enum class Exec { Serial, Parallel };

struct BatchGradient {
    double loss_sum = 0.0;
    Vec grad;  // sum over the batch, same layout as Model::params
};

/// Summed loss and gradient over `items`. Item i draws its Monte Carlo noise
/// from Rng::substream(batch_key, i).
BatchGradient batch_gradient(const Model& model, std::span<const TrainItem> items,
                             const LossSpec& loss, std::uint64_t batch_key, Exec exec);

/// Input to scoring: one feature vector of an example.
struct ScoreItem {
    const Vec* features = nullptr;
    int language = 0;
    std::int64_t stable_id = 0;
    int token = 0;
};

struct TokenScore {
    Vec probs;
    int predicted = 0;
    UncertaintyScore score;
};

/// Scores every item; item noise comes from
/// Rng::substream(seed, stable_id, token).
std::vector<TokenScore> score_items(const Model& model, std::span<const ScoreItem> items,
                                    const EstimatorConfig& est, std::uint64_t seed, Exec exec);

std::vector<ScoreItem> score_items_for(const std::vector<Example>& examples);

}  // namespace selflearn
