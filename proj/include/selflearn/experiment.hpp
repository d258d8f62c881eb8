#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "selflearn/engine.hpp"
#include "selflearn/synthdata.hpp"

namespace selflearn {

/// Invalid experiment configuration; `field` is the dotted path of the
/// offending key ("train.learning_rate", "data.synth.dim", ...).
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message)
        : std::runtime_error(field + ": " + message), field_(std::move(field)), message_(message) {}
    const std::string& field() const { return field_; }
    const std::string& message() const { return message_; }

private:
    std::string field_;
    std::string message_;
};

struct DataConfig {
    // Either a synthetic preset (optionally overridden) or a dataset directory.
    std::optional<std::filesystem::path> dir;
    std::string preset = "desk-xnli";
    SynthConfig synth;
    std::vector<double> rotations;
    double offset = 2.0;
};

struct ExperimentConfig {
    DataConfig data;
    std::string mode = "sl";       // direct | single | joint | sl
    std::string single_target;     // language name, single mode only
    EstimatorConfig estimator;
    bool evi_alpha_set = false;    // otherwise 1 for classification, 0.01 for tagging
    SelectionConfig selection;
    TrainConfig train;
    ModelSpec model;
    LoopConfig loop;
    std::uint64_t seed = 1;
    int repeats = 1;
    int histogram_bins = 20;
    std::string output;
};

/// Parses and validates a JSON config. Unknown keys are rejected.
ExperimentConfig parse_config(const std::string& text);

/// Stable 64-bit FNV-1a hash of the config text, as 16 hex digits.
std::string config_hash(const std::string& text);

/// Dataset for one seed: synthesized from the preset or read from disk.
Pool load_data(const ExperimentConfig& cfg, std::uint64_t seed);

/// Estimator with the task-dependent EVI default applied.
EstimatorConfig effective_estimator(const ExperimentConfig& cfg, Task task);

EngineConfig engine_config(const ExperimentConfig& cfg, std::uint64_t seed);

/// Parses "direct", "single", "joint", "sl" or "sl-<estimator>".
RunMode parse_mode(const std::string& name, const ExperimentConfig& cfg, const Pool& pool);

struct CommandOptions {
    std::vector<std::filesystem::path> configs;
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> out;
    std::optional<std::filesystem::path> checkpoint;  // eval-uncertainty
    std::string modes;                                // compare, comma separated
};

int cmd_synth(const CommandOptions& opts);
int cmd_run(const CommandOptions& opts);
int cmd_eval_uncertainty(const CommandOptions& opts);
int cmd_compare(const CommandOptions& opts);

/// Writes the state of an aborted run (reports so far and the model) to `dir`.
void write_abort_dump(const std::filesystem::path& dir, const RunAborted& err);

/// One-line machine-readable error record.
std::string error_record(const std::string& kind, const std::string& message,
                         const std::string& field = {});

}  // namespace selflearn
