#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "selflearn/datamodel.hpp"

namespace selflearn {

/// Distribution shift of one language. Features are generated in the source
/// frame, then rotated by `rotation_deg` in every configured plane, scaled
/// noise is added, and the result is translated.
struct LanguageShift {
    std::string name;
    double rotation_deg = 0.0;
    Vec translation;          // empty = no translation
    double noise_scale = 1.0;
    Vec class_prior;          // empty = uniform; classification only
};

struct SplitSizes {
    int train = 0;
    int unlabeled = 0;
    int dev = 0;
    int test = 0;
};

struct SynthConfig {
    Task task = Task::Classification;
    int num_classes = 3;                        // classification
    std::vector<std::string> entity_types = {"PER", "LOC", "ORG"};  // tagging
    int dim = 8;
    double separation = 3.0;   // distance of class/tag means from the origin
    double noise = 1.0;        // per-coordinate noise std before language scaling
    std::vector<std::pair<int, int>> rotation_planes = {{0, 1}};
    SplitSizes source_sizes{500, 0, 200, 200};
    SplitSizes target_sizes{0, 600, 0, 400};
    // tagging
    int min_length = 5;
    int max_length = 20;
    int min_entities = 0;   // planting attempts per sequence; overlapping ones are dropped
    int max_entities = 3;
    int max_entity_length = 3;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Shift specification for the whole pool; the first entry is the source and
/// must be unshifted.
using ShiftSpec = std::vector<LanguageShift>;

/// Default shifts: source "src" plus targets rotated by the given angles,
/// each translated by `offset` along its own axis among the coordinates not
/// used by class means.
ShiftSpec default_shifts(const SynthConfig& cfg, const std::vector<double>& target_rotations_deg,
                         double offset);

/// Default "desk-XNLI" and "desk-NER" benchmark configurations.
SynthConfig desk_classification_config(std::uint64_t seed);
SynthConfig desk_tagging_config(std::uint64_t seed);
ShiftSpec desk_classification_shifts(const SynthConfig& cfg);
ShiftSpec desk_tagging_shifts(const SynthConfig& cfg);

/// Class means used by the classification generator (one row per class).
std::vector<Vec> class_means(const SynthConfig& cfg);
/// Tag means used by the tagging generator; row 0 (the O tag) is the origin,
/// entity types are spread on a circle in plane (0,1).
std::vector<Vec> tag_means(const SynthConfig& cfg);

/// Applies a language shift to a source-frame point (noise excluded).
Vec apply_shift(const SynthConfig& cfg, const LanguageShift& shift, const Vec& x);

Pool gen_classification(const SynthConfig& cfg, const ShiftSpec& shifts);
Pool gen_tagging(const SynthConfig& cfg, const ShiftSpec& shifts);
Pool generate(const SynthConfig& cfg, const ShiftSpec& shifts);

}  // namespace selflearn
