#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "selflearn/datamodel.hpp"
#include "selflearn/estimators.hpp"
#include "selflearn/numerics.hpp"

namespace selflearn {

enum class Activation { Tanh, Relu };
std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

struct ModelShape {
    int input_dim = 0;
    int hidden = 32;  // 0 means a linear model straight on the features
    int classes = 0;
    int languages = 1;
    Activation activation = Activation::Tanh;

    int feature_width() const { return hidden > 0 ? hidden : input_dim; }
    bool operator==(const ModelShape&) const = default;
};

/// All trainable parameters live in one flat vector so that optimizers,
/// clipping and gradient checks treat them uniformly. Layout:
///
///   encoder weights  hidden x input   (absent for linear models)
///   encoder bias     hidden
///   logit weights    classes x width
///   logit bias       classes
///   logvar weights   classes x width  (heteroscedastic head, log sigma^2)
///   logvar bias      classes
///   lou log sigma    languages
class Model {
public:
    Model() = default;
    explicit Model(ModelShape shape);

    /// Random initialization. Weights are scaled by 1/sqrt(fan-in); the
    /// variance head starts at logvar = `logvar_init` with small weights.
    static Model initialized(ModelShape shape, Rng& rng, double logvar_init = -4.0);

    const ModelShape& shape() const { return shape_; }
    std::span<double> params() { return params_; }
    std::span<const double> params() const { return params_; }
    std::size_t size() const { return params_.size(); }

    struct Offsets {
        std::size_t enc_w, enc_b, out_w, out_b, var_w, var_b, lou, end;
        bool operator==(const Offsets&) const = default;
    };
    const Offsets& offsets() const { return off_; }

    std::span<const double> lou_logsigma() const;
    std::span<double> lou_logsigma();
    double lou_logsigma(int language) const;

    bool operator==(const Model&) const = default;

private:
    ModelShape shape_;
    Offsets off_{};
    Vec params_;
};

struct ForwardResult {
    Vec hidden;  // equals the input for linear models
    Vec pre_activation;
    Vec logits;
    Vec logvar;
};

/// Deterministic forward pass for one feature vector. Throws
/// std::invalid_argument on dimension mismatch and NumericError when the
/// head outputs are not finite.
ForwardResult forward(const Model& model, std::span<const double> x);

/// Accumulates scale * dLoss/dparams into `grad` (same layout as params).
void backward(const Model& model, std::span<const double> x, const ForwardResult& fwd,
              const HeadGradient& head, int language, double scale, std::span<double> grad);

struct TrainConfig {
    double learning_rate = 0.1;
    int batch_size = 32;
    int epochs_first = 5;
    int epochs_later = 3;
    double max_grad_norm = 1.0;
    std::uint64_t seed = 1;
    void validate() const;
};

/// One supervised token-level item: classification examples contribute one
/// item, tagging sequences one item per token.
struct TrainItem {
    const Vec* features = nullptr;
    int label = 0;
    int language = 0;
};

std::vector<TrainItem> flatten_items(const std::vector<const Example*>& examples);

struct LossSpec {
    LossKind kind = LossKind::CrossEntropy;
    int mc_samples = 20;
};

/// Scales `grad` in place so that its L2 norm is at most `max_norm` and
/// returns the factor applied.
double clip_gradient(std::span<double> grad, double max_norm);

/// Learning-rate multipliers at the first and last step of the epoch;
/// steps in between are interpolated linearly.
struct EpochSchedule {
    double lr_scale_begin = 1.0;
    double lr_scale_end = 1.0;
};

struct EpochResult {
    double mean_loss = 0.0;
    int steps = 0;
};

/// One pass of mini-batch SGD over `items` in the given order. The mean
/// batch gradient is clipped to cfg.max_grad_norm before each update.
/// Throws NumericError naming the batch and loss on a non-finite loss.
EpochResult train_epoch(Model& model, std::span<const TrainItem> items, const LossSpec& loss,
                        const TrainConfig& cfg, Rng& rng, EpochSchedule schedule = {});

/// Row of the hidden-state export.
struct HiddenRow {
    std::int64_t stable_id = 0;
    int token = 0;
    int language = 0;
    int predicted = 0;
    int gold = -1;
    bool correct = false;
    Vec hidden;
};

std::vector<HiddenRow> export_hidden(const Model& model, const Pool& pool, Split split);
void write_hidden_csv(std::ostream& os, const Pool& pool, const std::vector<HiddenRow>& rows,
                      int hidden_width);

/// Checkpoint: JSON object with the shape, the flat parameter vector and a
/// caller-supplied config hash. Doubles are written in shortest round-trip
/// form so load(save(m)) == m bit for bit.
std::string save_model_json(const Model& model, const std::string& config_hash);
Model load_model_json(const std::string& text, std::string* config_hash = nullptr);

}  // namespace selflearn
