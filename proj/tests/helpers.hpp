#pragma once

#include <cstdint>

#include "selflearn/datamodel.hpp"
#include "selflearn/numerics.hpp"

namespace testing_util {

using namespace selflearn;

inline Example make_example(std::int64_t id, int language, std::vector<Vec> tokens, std::vector<int> labels,
                            bool hidden) {
    Example ex;
    ex.stable_id = id;
    ex.language = language;
    ex.tokens = std::move(tokens);
    set_hidden_gold(ex, labels);
    if (hidden) {
        ex.provenance = {Provenance::Kind::Unlabeled, 0};
    } else {
        ex.labels = std::move(labels);
    }
    return ex;
}

// Two languages, three classes, a handful of 2-d items per split.
inline Pool tiny_classification_pool() {
    Pool p;
    p.labels = LabelSet::classification({"a", "b", "c"});
    p.languages = {{0, "src"}, {1, "tgt"}};
    p.data.resize(2);
    std::int64_t id = 1;
    for (int i = 0; i < 6; ++i) {
        p.data[0].train.push_back(make_example(id++, 0, {{double(i), 0.5}}, {i % 3}, false));
        p.data[0].dev.push_back(make_example(id++, 0, {{double(i), -0.5}}, {i % 3}, false));
        p.data[1].unlabeled.push_back(make_example(id++, 1, {{0.25 * i, 1.0}}, {(i + 1) % 3}, true));
        p.data[1].test.push_back(make_example(id++, 1, {{-0.25 * i, 1.0}}, {i % 3}, false));
    }
    return p;
}

inline Pool tiny_tagging_pool() {
    Pool p;
    p.labels = LabelSet::tagging({"PER", "LOC"});
    p.languages = {{0, "src"}, {1, "tgt"}};
    p.data.resize(2);
    std::int64_t id = 1;
    const std::vector<std::vector<int>> tags{{0, 1, 2, 0}, {3, 0}, {0, 0, 0}, {1, 3, 4}};
    for (std::size_t i = 0; i < tags.size(); ++i) {
        std::vector<Vec> toks;
        for (std::size_t t = 0; t < tags[i].size(); ++t) toks.push_back({double(i), double(t), -1.5});
        p.data[0].train.push_back(make_example(id++, 0, toks, tags[i], false));
        p.data[0].dev.push_back(make_example(id++, 0, toks, tags[i], false));
        p.data[1].unlabeled.push_back(make_example(id++, 1, toks, tags[i], true));
        p.data[1].test.push_back(make_example(id++, 1, toks, tags[i], false));
    }
    return p;
}

}  // namespace testing_util
