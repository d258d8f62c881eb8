#include "selflearn/synthdata.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "selflearn/dataset_io.hpp"

namespace selflearn {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr int kTagDims = 4;  // coordinates carrying tag signal

int draw_class(const Vec& prior, int classes, Rng& rng) {
    if (prior.empty()) return static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
    double total = 0.0;
    for (double w : prior) total += w;
    double u = rng.uniform() * total;
    for (int c = 0; c < classes; ++c) {
        u -= prior[static_cast<std::size_t>(c)];
        if (u < 0.0) return c;
    }
    return classes - 1;
}

Vec sample_point(const SynthConfig& cfg, const LanguageShift& shift, const Vec& mean, Rng& rng) {
    Vec x = mean;
    const double sd = cfg.noise * shift.noise_scale;
    for (double& v : x) v += sd * rng.normal();
    return apply_shift(cfg, shift, x);
}

Pool empty_pool(const SynthConfig& cfg, const ShiftSpec& shifts) {
    if (shifts.empty()) throw std::invalid_argument("shift spec needs at least the source language");
    const auto& src = shifts.front();
    if (src.rotation_deg != 0.0 || src.noise_scale != 1.0) {
        throw std::invalid_argument("source language must be unshifted");
    }
    for (double t : src.translation) {
        if (t != 0.0) throw std::invalid_argument("source language must be unshifted");
    }
    Pool pool;
    if (cfg.task == Task::Tagging) {
        pool.labels = LabelSet::tagging(cfg.entity_types);
    } else {
        std::vector<std::string> names;
        for (int c = 0; c < cfg.num_classes; ++c) names.push_back("c" + std::to_string(c));
        pool.labels = LabelSet::classification(names);
    }
    for (std::size_t l = 0; l < shifts.size(); ++l) {
        const auto& s = shifts[l];
        if (!s.translation.empty() && s.translation.size() != static_cast<std::size_t>(cfg.dim)) {
            throw std::invalid_argument("translation of language '" + s.name + "' has wrong dimension");
        }
        if (!s.class_prior.empty() && s.class_prior.size() != static_cast<std::size_t>(cfg.num_classes)) {
            throw std::invalid_argument("class prior of language '" + s.name + "' has wrong size");
        }
        pool.languages.push_back({static_cast<int>(l), s.name});
    }
    pool.data.resize(shifts.size());
    pool.source = 0;
    return pool;
}

void file(Example ex, std::vector<int> labels, Split split, LanguageData& lang) {
    set_hidden_gold(ex, labels);
    if (split == Split::Unlabeled) {
        ex.provenance = {Provenance::Kind::Unlabeled, 0};
    } else {
        ex.labels = std::move(labels);
        ex.provenance = {Provenance::Kind::Gold, 0};
    }
    lang.part(split).push_back(std::move(ex));
}

const SplitSizes& sizes_for(const SynthConfig& cfg, std::size_t language) {
    return language == 0 ? cfg.source_sizes : cfg.target_sizes;
}

int count_of(const SplitSizes& s, Split split) {
    switch (split) {
        case Split::Train: return s.train;
        case Split::Unlabeled: return s.unlabeled;
        case Split::Dev: return s.dev;
        case Split::Test: return s.test;
    }
    return 0;
}

constexpr Split kSplits[] = {Split::Train, Split::Unlabeled, Split::Dev, Split::Test};

}  // namespace

void SynthConfig::validate() const {
    if (dim < 2) throw std::invalid_argument("synth: dim must be >= 2");
    if (!(separation > 0.0)) throw std::invalid_argument("synth: separation must be > 0");
    if (!(noise > 0.0)) throw std::invalid_argument("synth: noise must be > 0");
    for (const auto* s : {&source_sizes, &target_sizes}) {
        if (s->train < 0 || s->unlabeled < 0 || s->dev < 0 || s->test < 0) {
            throw std::invalid_argument("synth: split sizes must be >= 0");
        }
    }
    if (source_sizes.train < 1 || source_sizes.dev < 1) {
        throw std::invalid_argument("synth: source needs train and dev data");
    }
    for (auto [a, b] : rotation_planes) {
        if (a < 0 || b < 0 || a >= dim || b >= dim || a == b) {
            throw std::invalid_argument("synth: bad rotation plane");
        }
    }
    if (task == Task::Classification) {
        if (num_classes < 2) throw std::invalid_argument("synth: need at least 2 classes");
    } else {
        if (entity_types.empty()) throw std::invalid_argument("synth: need entity types");
        if (dim < kTagDims) {
            throw std::invalid_argument("synth: tagging needs dim >= 4");
        }
        if (min_length < 1 || max_length < min_length || min_entities < 0 || max_entities < min_entities || max_entity_length < 1) {
            throw std::invalid_argument("synth: bad sequence length settings");
        }
    }
}

std::vector<Vec> class_means(const SynthConfig& cfg) {
    std::vector<Vec> means;
    for (int c = 0; c < cfg.num_classes; ++c) {
        Vec m(static_cast<std::size_t>(cfg.dim), 0.0);
        double angle = 2.0 * std::numbers::pi * c / cfg.num_classes;
        m[0] = cfg.separation * std::cos(angle);
        m[1] = cfg.separation * std::sin(angle);
        means.push_back(std::move(m));
    }
    return means;
}

std::vector<Vec> tag_means(const SynthConfig& cfg) {
    const int types = static_cast<int>(cfg.entity_types.size());
    const int tags = 1 + 2 * types;
    std::vector<Vec> means(static_cast<std::size_t>(tags), Vec(static_cast<std::size_t>(cfg.dim), 0.0));
    // Entity types sit on a circle in plane (0,1) like classes do; axis 2
    // separates B- (+) from I- (-) and axis 3 marks "inside an entity".
    // Rotating plane (0,1) then confuses types, not boundaries or O.
    for (int t = 0; t < types; ++t) {
        const double angle = 2.0 * std::numbers::pi * t / types;
        for (int inside = 0; inside < 2; ++inside) {
            Vec& m = means[static_cast<std::size_t>(1 + 2 * t + inside)];
            m[0] = cfg.separation * std::cos(angle);
            m[1] = cfg.separation * std::sin(angle);
            m[2] = inside ? -cfg.separation : cfg.separation;
            m[3] = 2.0 * cfg.separation;
        }
    }
    return means;
}

Vec apply_shift(const SynthConfig& cfg, const LanguageShift& shift, const Vec& x) {
    Vec y = x;
    if (shift.rotation_deg != 0.0) {
        const double c = std::cos(shift.rotation_deg * kDeg);
        const double s = std::sin(shift.rotation_deg * kDeg);
        for (auto [a, b] : cfg.rotation_planes) {
            double u = y[static_cast<std::size_t>(a)];
            double v = y[static_cast<std::size_t>(b)];
            y[static_cast<std::size_t>(a)] = c * u - s * v;
            y[static_cast<std::size_t>(b)] = s * u + c * v;
        }
    }
    for (std::size_t i = 0; i < shift.translation.size(); ++i) y[i] += shift.translation[i];
    return y;
}

ShiftSpec default_shifts(const SynthConfig& cfg, const std::vector<double>& target_rotations_deg,
                         double offset) {
    // Coordinates carrying no class signal are free for language offsets.
    const int used = cfg.task == Task::Tagging ? kTagDims : 2;
    const int free_dims = cfg.dim - used;
    ShiftSpec spec;
    spec.push_back({"src", 0.0, {}, 1.0, {}});
    for (std::size_t i = 0; i < target_rotations_deg.size(); ++i) {
        LanguageShift s;
        s.name = "t" + std::to_string(i + 1);
        s.rotation_deg = target_rotations_deg[i];
        if (free_dims > 0 && offset != 0.0) {
            s.translation.assign(static_cast<std::size_t>(cfg.dim), 0.0);
            s.translation[static_cast<std::size_t>(used + static_cast<int>(i) % free_dims)] =
                (static_cast<int>(i) / free_dims) % 2 == 0 ? offset : -offset;
        }
        spec.push_back(std::move(s));
    }
    return spec;
}

SynthConfig desk_classification_config(std::uint64_t seed) {
    SynthConfig cfg;
    cfg.task = Task::Classification;
    cfg.num_classes = 3;
    cfg.dim = 8;
    cfg.seed = seed;
    return cfg;
}

SynthConfig desk_tagging_config(std::uint64_t seed) {
    SynthConfig cfg;
    cfg.task = Task::Tagging;
    cfg.dim = 8;
    cfg.separation = 4.0;
    cfg.rotation_planes = {{0, 1}};
    cfg.min_entities = 1;
    cfg.max_entities = 1;
    cfg.source_sizes = {400, 0, 100, 200};
    // the entity-level rule admits few sequences per round, so the pools are larger
    cfg.target_sizes = {0, 2000, 0, 200};
    cfg.seed = seed;
    return cfg;
}

ShiftSpec desk_classification_shifts(const SynthConfig& cfg) {
    return default_shifts(cfg, {15.0, 30.0, 45.0, 60.0}, 2.0);
}

ShiftSpec desk_tagging_shifts(const SynthConfig& cfg) {
    return default_shifts(cfg, {15.0, 30.0, 45.0, 60.0}, 2.0);
}

Pool gen_classification(const SynthConfig& cfg, const ShiftSpec& shifts) {
    cfg.validate();
    if (cfg.task != Task::Classification) throw std::invalid_argument("gen_classification: wrong task");
    Pool pool = empty_pool(cfg, shifts);
    const auto means = class_means(cfg);
    for (std::size_t l = 0; l < shifts.size(); ++l) {
        for (Split split : kSplits) {
            Rng rng = Rng::substream(cfg.seed, l, static_cast<std::uint64_t>(split));
            const int n = count_of(sizes_for(cfg, l), split);
            for (int i = 0; i < n; ++i) {
                int c = draw_class(shifts[l].class_prior, cfg.num_classes, rng);
                Example ex;
                ex.language = static_cast<int>(l);
                ex.tokens.push_back(sample_point(cfg, shifts[l], means[static_cast<std::size_t>(c)], rng));
                file(std::move(ex), {c}, split, pool.data[l]);
            }
        }
    }
    assign_canonical_ids(pool);
    pool.validate();
    return pool;
}

Pool gen_tagging(const SynthConfig& cfg, const ShiftSpec& shifts) {
    cfg.validate();
    if (cfg.task != Task::Tagging) throw std::invalid_argument("gen_tagging: wrong task");
    Pool pool = empty_pool(cfg, shifts);
    const auto means = tag_means(cfg);
    const LabelSet& labels = pool.labels;
    const int types = static_cast<int>(cfg.entity_types.size());
    for (std::size_t l = 0; l < shifts.size(); ++l) {
        for (Split split : kSplits) {
            Rng rng = Rng::substream(cfg.seed, l, static_cast<std::uint64_t>(split));
            const int n = count_of(sizes_for(cfg, l), split);
            for (int i = 0; i < n; ++i) {
                const int len = cfg.min_length +
                                static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.max_length - cfg.min_length + 1)));
                std::vector<int> tags(static_cast<std::size_t>(len), labels.outside_tag());
                const int wanted = cfg.min_entities + static_cast<int>(rng.below(
                                                           static_cast<std::uint64_t>(cfg.max_entities - cfg.min_entities + 1)));
                for (int e = 0; e < wanted; ++e) {
                    const int type = static_cast<int>(rng.below(static_cast<std::uint64_t>(types)));
                    const int span = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.max_entity_length)));
                    if (span > len) continue;
                    const int start = static_cast<int>(rng.below(static_cast<std::uint64_t>(len - span + 1)));
                    bool free = true;
                    for (int t = start; t < start + span; ++t) free = free && tags[static_cast<std::size_t>(t)] == 0;
                    // keep planted entities apart so each span is unambiguous
                    if (start > 0 && tags[static_cast<std::size_t>(start - 1)] != 0) free = false;
                    if (start + span < len && tags[static_cast<std::size_t>(start + span)] != 0) free = false;
                    if (!free) continue;
                    tags[static_cast<std::size_t>(start)] = labels.begin_tag(type);
                    for (int t = start + 1; t < start + span; ++t) tags[static_cast<std::size_t>(t)] = labels.inside_tag(type);
                }
                Example ex;
                ex.language = static_cast<int>(l);
                for (int tag : tags) {
                    ex.tokens.push_back(sample_point(cfg, shifts[l], means[static_cast<std::size_t>(tag)], rng));
                }
                file(std::move(ex), std::move(tags), split, pool.data[l]);
            }
        }
    }
    assign_canonical_ids(pool);
    pool.validate();
    return pool;
}

Pool generate(const SynthConfig& cfg, const ShiftSpec& shifts) {
    return cfg.task == Task::Tagging ? gen_tagging(cfg, shifts) : gen_classification(cfg, shifts);
}

}  // namespace selflearn
