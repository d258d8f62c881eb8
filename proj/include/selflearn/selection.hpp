#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "selflearn/datamodel.hpp"

namespace selflearn {

struct SelectionConfig {
    double top_k_percent = 8.0;
    void validate() const;
};

/// Quota per label for a pool of `pool_size` items: floor(K/100 * N).
int selection_quota(double top_k_percent, std::size_t pool_size);

struct ScoredItem {
    std::int64_t stable_id = 0;
    int predicted = 0;
    double gamma = 0.0;
};

/// Balanced top-K selection. For each language the quota is computed from
/// that language's candidate count; within each predicted class the most
/// certain items (ascending gamma, then ascending stable_id) fill the quota.
/// `scored` is indexed by language id.
SelectionResult select_classification(const std::vector<std::vector<ScoredItem>>& scored,
                                      int num_classes, const SelectionConfig& cfg);

struct ScoredSequence {
    std::int64_t stable_id = 0;
    std::vector<int> tags;
    std::vector<double> token_gamma;
};

struct ScoredEntity {
    Span span;
    double gamma = 0.0;
};

/// Decodes the predicted tags and scores each entity by the mean gamma of
/// its tokens.
std::vector<ScoredEntity> score_entities(const LabelSet& labels, const ScoredSequence& seq);

/// Entity-level selection for tagging. Per language and entity type the
/// threshold is the q-th smallest entity gamma, q = floor(K/100 * count). A
/// sequence is taken iff it has at least one predicted entity and every one
/// of them is within its type's threshold.
SelectionResult select_tagging(const LabelSet& labels,
                               const std::vector<std::vector<ScoredSequence>>& scored,
                               const SelectionConfig& cfg);

/// Selection audit CSV: language,label,quota,taken,threshold_gamma.
void write_selection_audit(std::ostream& os, const Pool& pool, const SelectionResult& result);

}  // namespace selflearn
