#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "selflearn/numerics.hpp"

namespace selflearn {

enum class Task { Classification, Tagging };

/// Thrown when pool bookkeeping would be violated (unknown or duplicate ids).
class ConsistencyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Language {
    int id = 0;
    std::string name;
    bool operator==(const Language&) const = default;
};

/// Label inventory. For tagging the classes are BIO2 tags: "O" first, then
/// B-X and I-X for each entity type X, in entity-type order.
class LabelSet {
public:
    static LabelSet classification(std::vector<std::string> classes);
    static LabelSet tagging(std::vector<std::string> entity_types);

    Task task() const { return task_; }
    int size() const { return static_cast<int>(classes_.size()); }
    const std::vector<std::string>& names() const { return classes_; }
    const std::vector<std::string>& entity_types() const { return entity_types_; }
    int id_of(const std::string& name) const;
    const std::string& name_of(int id) const { return classes_.at(static_cast<std::size_t>(id)); }

    // BIO helpers (tagging only).
    int outside_tag() const { return 0; }
    int begin_tag(int type) const { return 1 + 2 * type; }
    int inside_tag(int type) const { return 2 + 2 * type; }
    bool is_begin(int tag) const { return tag > 0 && tag % 2 == 1; }
    bool is_inside(int tag) const { return tag > 0 && tag % 2 == 0; }
    /// Entity type of a B/I tag, -1 for O.
    int type_of(int tag) const { return tag == 0 ? -1 : (tag - 1) / 2; }

    bool operator==(const LabelSet&) const = default;

private:
    Task task_ = Task::Classification;
    std::vector<std::string> classes_;
    std::vector<std::string> entity_types_;
};

/// Half-open token range [begin, end) with an entity type.
struct Span {
    int begin = 0;
    int end = 0;
    int type = 0;
    auto operator<=>(const Span&) const = default;
};

/// Decodes BIO2 tags into spans. An I-X that does not continue a B-X/I-X run
/// opens a new span, as if it were B-X.
std::vector<Span> decode_spans(const LabelSet& labels, const std::vector<int>& tags);

struct Provenance {
    enum class Kind { Gold, Silver, Unlabeled };
    Kind kind = Kind::Gold;
    int iteration = 0;  // iteration whose training phase first used the silver label
    bool operator==(const Provenance&) const = default;
};

/// One item. Classification examples hold a single feature vector; tagging
/// examples hold one vector per token. `labels` are the labels training may
/// see: gold for gold items, silver for selected items, empty when unlabeled.
class Example {
public:
    std::int64_t stable_id = 0;
    int language = 0;
    std::vector<Vec> tokens;
    std::vector<int> labels;
    Provenance provenance;

    std::size_t length() const { return tokens.size(); }
    bool has_visible_labels() const { return !labels.empty(); }

    /// Turns a gold example into an unlabeled one; the labels move behind the
    /// evaluation fence.
    void hide_labels();
    /// Fixes a silver label; the hidden gold labels stay untouched.
    void assign_silver(std::vector<int> silver, int iteration);

    bool operator==(const Example&) const = default;

private:
    std::vector<int> hidden_gold_;
    friend const std::vector<int>& evaluation_gold(const Example& ex);
    friend void set_hidden_gold(Example& ex, std::vector<int> gold);
};

/// Evaluation-only view of the gold labels of any example, including the
/// fenced labels of unlabeled and silver items. Training and selection code
/// must not call this.
const std::vector<int>& evaluation_gold(const Example& ex);
void set_hidden_gold(Example& ex, std::vector<int> gold);

enum class Split { Train, Unlabeled, Dev, Test };
const char* split_name(Split s);
Split split_from_name(const std::string& name);

struct LanguageData {
    std::vector<Example> train;
    std::vector<Example> unlabeled;
    std::vector<Example> dev;
    std::vector<Example> test;

    std::vector<Example>& part(Split s);
    const std::vector<Example>& part(Split s) const;
    bool operator==(const LanguageData&) const = default;
};

struct Pool {
    LabelSet labels;
    std::vector<Language> languages;
    int source = 0;
    std::vector<LanguageData> data;  // indexed by language id

    int num_languages() const { return static_cast<int>(languages.size()); }
    std::vector<int> targets() const;
    int language_id(const std::string& name) const;
    /// Validates dense language ids, disjoint stable ids, label ranges and a
    /// non-empty source train/dev split. Throws ConsistencyError.
    void validate() const;
    bool operator==(const Pool&) const = default;
};

struct SelectedItem {
    std::int64_t stable_id = 0;
    std::vector<int> silver;  // one label (classification) or a full tag sequence
    double gamma = 0.0;
};

struct QuotaRecord {
    int language = 0;
    int label = 0;  // class id, or entity type id for tagging
    int quota = 0;
    int taken = 0;
    double threshold_gamma = 0.0;  // gamma of the last admitted item; NaN when none
};

struct SelectionResult {
    std::vector<std::vector<SelectedItem>> per_language;  // indexed by language id
    std::vector<QuotaRecord> quotas;

    std::size_t total() const;
};

/// Moves the selected items from unlabeled to train with their silver labels.
/// Throws ConsistencyError for unknown or repeated ids; the input pool is
/// left untouched in that case.
Pool move_to_train(Pool pool, const SelectionResult& selected, int iteration);

}  // namespace selflearn
