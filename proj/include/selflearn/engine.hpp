#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "selflearn/classifier.hpp"
#include "selflearn/datamodel.hpp"
#include "selflearn/estimators.hpp"
#include "selflearn/kernels.hpp"
#include "selflearn/selection.hpp"

namespace selflearn {

struct RunMode {
    enum class Kind { Direct, SingleLanguage, Joint, JointWithUncertainty };
    Kind kind = Kind::JointWithUncertainty;
    int target = -1;  // SingleLanguage only
    EstimatorConfig estimator;

    static RunMode direct() { return {Kind::Direct, -1, {}}; }
    static RunMode single(int target) { return {Kind::SingleLanguage, target, {}}; }
    static RunMode joint() { return {Kind::Joint, -1, {}}; }
    static RunMode with_uncertainty(EstimatorConfig est) { return {Kind::JointWithUncertainty, -1, est}; }

    /// Estimator used for scoring: the configured one, or plain softmax
    /// (MPR) for the baselines.
    EstimatorConfig scoring_estimator() const;
    std::string label() const;
};

struct LoopConfig {
    int patience = 2;
    int max_iterations = 50;
};

struct ModelSpec {
    int hidden = 32;
    Activation activation = Activation::Tanh;
    double logvar_init = -4.0;
};

struct EngineConfig {
    TrainConfig train;
    SelectionConfig selection;
    ModelSpec model;
    LoopConfig loop;
    std::uint64_t seed = 1;
};

/// Metrics of one language after the training phase of one iteration.
struct IterationReport {
    int iteration = 0;
    int language = 0;
    std::string language_name;
    bool is_source = false;
    std::string metric_name;  // "accuracy" or "span_f1"
    double test_metric = 0.0;
    std::optional<double> dev_metric;
    std::optional<double> auroc;
    std::size_t train_size = 0;
    std::size_t silver_size = 0;
    std::size_t unlabeled_size = 0;
    std::size_t silver_added = 0;          // silver items that entered training this iteration
    std::optional<double> silver_precision;  // of those items, from fenced gold labels
    double mean_train_loss = 0.0;
    double lou_sigma2 = 1.0;
};

std::string report_to_json(const IterationReport& r);

struct RunResult {
    Model model;
    Pool pool;  // final pool, silver items included
    std::vector<IterationReport> reports;
    std::vector<SelectionResult> selections;  // selections[i] fed iteration i + 2
    std::vector<double> dev_history;
    std::string stop_reason;
    int iterations = 0;

    /// Final-iteration test metric for every language.
    std::vector<double> final_metrics() const;
    double mean_target_metric(const Pool& pool) const;
};

/// Thrown when training produces a non-finite loss. Carries the state at the
/// point of failure (model, pool, reports so far) for dumping.
class RunAborted : public NumericError {
public:
    RunAborted(const std::string& what, RunResult partial)
        : NumericError(what), partial_(std::make_shared<const RunResult>(std::move(partial))) {}
    const RunResult& partial() const { return *partial_; }

private:
    std::shared_ptr<const RunResult> partial_;
};

/// Items of one training epoch: the fresh selection plus an equally sized
/// uniform sample (without replacement) of the existing training set,
/// shuffled. With no fresh items the existing set is returned unchanged.
std::vector<const Example*> build_epoch_dataset(const std::vector<const Example*>& existing,
                                                const std::vector<const Example*>& fresh, Rng& rng);

/// True iff the best value (first occurrence) is at least `patience`
/// entries before the end of the history.
bool early_stop(const std::vector<double>& history, int patience = 2);

/// Predictions and scores for one split of one language.
struct SplitEvaluation {
    double metric = 0.0;
    std::optional<double> auroc;
    std::vector<std::int64_t> stable_ids;  // one per scored token
    std::vector<int> tokens;
    std::vector<int> predicted;
    std::vector<int> gold;  // -1 when unknown
    std::vector<UncertaintyScore> scores;
};

SplitEvaluation evaluate_split(const Model& model, const Pool& pool, int language, Split split,
                               const EstimatorConfig& est, std::uint64_t seed, Exec exec = Exec::Parallel);

/// Runs the self-learning loop until the unlabeled pools are exhausted,
/// a selection comes back empty, or early stopping fires on the source dev
/// metric. Throws RunAborted if training diverges.
RunResult run(const Pool& pool, const RunMode& mode, const EngineConfig& cfg);

}  // namespace selflearn
