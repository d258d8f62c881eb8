#include "selflearn/datamodel.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

namespace selflearn {

LabelSet LabelSet::classification(std::vector<std::string> classes) {
    if (classes.size() < 2) throw std::invalid_argument("LabelSet: need at least 2 classes");
    LabelSet s;
    s.task_ = Task::Classification;
    s.classes_ = std::move(classes);
    return s;
}

LabelSet LabelSet::tagging(std::vector<std::string> entity_types) {
    if (entity_types.empty()) throw std::invalid_argument("LabelSet: need at least 1 entity type");
    LabelSet s;
    s.task_ = Task::Tagging;
    s.classes_.push_back("O");
    for (const auto& t : entity_types) {
        s.classes_.push_back("B-" + t);
        s.classes_.push_back("I-" + t);
    }
    s.entity_types_ = std::move(entity_types);
    return s;
}

int LabelSet::id_of(const std::string& name) const {
    auto it = std::find(classes_.begin(), classes_.end(), name);
    if (it == classes_.end()) throw std::invalid_argument("unknown label '" + name + "'");
    return static_cast<int>(it - classes_.begin());
}

std::vector<Span> decode_spans(const LabelSet& labels, const std::vector<int>& tags) {
    std::vector<Span> spans;
    int open_type = -1;
    for (int i = 0; i < static_cast<int>(tags.size()); ++i) {
        int tag = tags[static_cast<std::size_t>(i)];
        int type = labels.type_of(tag);
        bool continues = labels.is_inside(tag) && open_type == type;
        if (continues) {
            spans.back().end = i + 1;
            continue;
        }
        if (tag == labels.outside_tag()) {
            open_type = -1;
            continue;
        }
        spans.push_back({i, i + 1, type});
        open_type = type;
    }
    return spans;
}

void Example::hide_labels() {
    if (hidden_gold_.empty()) hidden_gold_ = labels;
    labels.clear();
    provenance = {Provenance::Kind::Unlabeled, 0};
}

void Example::assign_silver(std::vector<int> silver, int iteration) {
    labels = std::move(silver);
    provenance = {Provenance::Kind::Silver, iteration};
}

const std::vector<int>& evaluation_gold(const Example& ex) { return ex.hidden_gold_; }

void set_hidden_gold(Example& ex, std::vector<int> gold) { ex.hidden_gold_ = std::move(gold); }

const char* split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Unlabeled: return "unlabeled";
        case Split::Dev: return "dev";
        case Split::Test: return "test";
    }
    return "?";
}

Split split_from_name(const std::string& name) {
    for (Split s : {Split::Train, Split::Unlabeled, Split::Dev, Split::Test}) {
        if (name == split_name(s)) return s;
    }
    throw std::invalid_argument("unknown split '" + name + "'");
}

std::vector<Example>& LanguageData::part(Split s) {
    switch (s) {
        case Split::Train: return train;
        case Split::Unlabeled: return unlabeled;
        case Split::Dev: return dev;
        case Split::Test: return test;
    }
    throw std::invalid_argument("bad split");
}

const std::vector<Example>& LanguageData::part(Split s) const {
    return const_cast<LanguageData*>(this)->part(s);
}

std::vector<int> Pool::targets() const {
    std::vector<int> out;
    for (const auto& l : languages) {
        if (l.id != source) out.push_back(l.id);
    }
    return out;
}

int Pool::language_id(const std::string& name) const {
    for (const auto& l : languages) {
        if (l.name == name) return l.id;
    }
    throw std::invalid_argument("unknown language '" + name + "'");
}

void Pool::validate() const {
    if (languages.empty()) throw ConsistencyError("pool has no languages");
    if (data.size() != languages.size()) throw ConsistencyError("pool data/language count mismatch");
    for (std::size_t i = 0; i < languages.size(); ++i) {
        if (languages[i].id != static_cast<int>(i)) throw ConsistencyError("language ids not dense");
    }
    if (source < 0 || source >= num_languages()) throw ConsistencyError("source language out of range");
    if (data[static_cast<std::size_t>(source)].train.empty() ||
        data[static_cast<std::size_t>(source)].dev.empty()) {
        throw ConsistencyError("source language needs non-empty train and dev splits");
    }
    std::unordered_set<std::int64_t> seen;
    for (std::size_t l = 0; l < data.size(); ++l) {
        for (Split s : {Split::Train, Split::Unlabeled, Split::Dev, Split::Test}) {
            for (const auto& ex : data[l].part(s)) {
                if (!seen.insert(ex.stable_id).second) {
                    throw ConsistencyError("duplicate stable_id " + std::to_string(ex.stable_id));
                }
                if (ex.language != static_cast<int>(l)) {
                    throw ConsistencyError("example " + std::to_string(ex.stable_id) +
                                           " filed under the wrong language");
                }
                if (ex.tokens.empty()) throw ConsistencyError("example without tokens");
                if (labels.task() == Task::Classification && ex.tokens.size() != 1) {
                    throw ConsistencyError("classification example with several feature vectors");
                }
                for (const auto* lab : {&ex.labels, &evaluation_gold(ex)}) {
                    if (!lab->empty() && lab->size() != ex.tokens.size()) {
                        throw ConsistencyError("label count does not match token count");
                    }
                    for (int y : *lab) {
                        if (y < 0 || y >= labels.size()) throw ConsistencyError("label out of range");
                    }
                }
                if (s == Split::Unlabeled && ex.has_visible_labels()) {
                    throw ConsistencyError("unlabeled example exposes labels");
                }
            }
        }
    }
}

std::size_t SelectionResult::total() const {
    std::size_t n = 0;
    for (const auto& v : per_language) n += v.size();
    return n;
}

Pool move_to_train(Pool pool, const SelectionResult& selected, int iteration) {
    if (selected.per_language.size() > pool.data.size()) {
        for (std::size_t l = pool.data.size(); l < selected.per_language.size(); ++l) {
            if (!selected.per_language[l].empty()) {
                throw ConsistencyError("selection names an unknown language");
            }
        }
    }
    // Validate everything before touching the pool.
    std::vector<std::unordered_map<std::int64_t, std::size_t>> index(selected.per_language.size());
    for (std::size_t l = 0; l < selected.per_language.size(); ++l) {
        const auto& picks = selected.per_language[l];
        if (picks.empty()) continue;
        const auto& unlabeled = pool.data[l].unlabeled;
        std::unordered_map<std::int64_t, std::size_t> where;
        for (std::size_t i = 0; i < unlabeled.size(); ++i) where[unlabeled[i].stable_id] = i;
        for (const auto& item : picks) {
            auto it = where.find(item.stable_id);
            if (it == where.end()) {
                throw ConsistencyError("selected id " + std::to_string(item.stable_id) +
                                       " is not in the unlabeled split of language " +
                                       std::to_string(l));
            }
            if (!index[l].emplace(item.stable_id, it->second).second) {
                throw ConsistencyError("id " + std::to_string(item.stable_id) + " selected twice");
            }
            if (item.silver.size() != unlabeled[it->second].length()) {
                throw ConsistencyError("silver label length mismatch for id " +
                                       std::to_string(item.stable_id));
            }
        }
    }

    for (std::size_t l = 0; l < selected.per_language.size(); ++l) {
        const auto& picks = selected.per_language[l];
        if (picks.empty()) continue;
        auto& lang = pool.data[l];
        std::vector<char> taken(lang.unlabeled.size(), 0);
        for (const auto& item : picks) {
            std::size_t i = index[l].at(item.stable_id);
            taken[i] = 1;
            Example ex = lang.unlabeled[i];
            ex.assign_silver(item.silver, iteration);
            lang.train.push_back(std::move(ex));
        }
        std::vector<Example> rest;
        rest.reserve(lang.unlabeled.size() - picks.size());
        for (std::size_t i = 0; i < lang.unlabeled.size(); ++i) {
            if (!taken[i]) rest.push_back(std::move(lang.unlabeled[i]));
        }
        lang.unlabeled = std::move(rest);
    }
    return pool;
}

}  // namespace selflearn
