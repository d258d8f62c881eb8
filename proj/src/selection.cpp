#include "selflearn/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

namespace selflearn {

void SelectionConfig::validate() const {
    if (!(top_k_percent > 0.0 && top_k_percent <= 100.0)) {
        throw std::invalid_argument("top_k_percent must be in (0, 100]");
    }
}

int selection_quota(double top_k_percent, std::size_t pool_size) {
    // The small epsilon keeps exact products such as 8% of 100 from flooring to 7.
    return static_cast<int>(std::floor(top_k_percent / 100.0 * static_cast<double>(pool_size) + 1e-9));
}

namespace {

bool more_certain(double ga, std::int64_t ia, double gb, std::int64_t ib) {
    if (ga != gb) return ga < gb;
    return ia < ib;
}

// Rank key of an entity: gamma, then owning sequence, then position.
struct EntityKey {
    double gamma;
    std::int64_t id;
    int begin;
    bool operator<(const EntityKey& o) const {
        if (gamma != o.gamma) return gamma < o.gamma;
        if (id != o.id) return id < o.id;
        return begin < o.begin;
    }
};

}  // namespace

SelectionResult select_classification(const std::vector<std::vector<ScoredItem>>& scored,
                                      int num_classes, const SelectionConfig& cfg) {
    cfg.validate();
    SelectionResult result;
    result.per_language.resize(scored.size());
    for (std::size_t l = 0; l < scored.size(); ++l) {
        const auto& items = scored[l];
        if (items.empty()) continue;
        const int quota = selection_quota(cfg.top_k_percent, items.size());
        std::vector<std::vector<const ScoredItem*>> by_class(static_cast<std::size_t>(num_classes));
        for (const auto& it : items) {
            if (it.predicted < 0 || it.predicted >= num_classes) {
                throw std::invalid_argument("select_classification: predicted class out of range");
            }
            if (!std::isfinite(it.gamma)) throw std::invalid_argument("select_classification: non-finite gamma");
            by_class[static_cast<std::size_t>(it.predicted)].push_back(&it);
        }
        for (int c = 0; c < num_classes; ++c) {
            auto& cands = by_class[static_cast<std::size_t>(c)];
            std::sort(cands.begin(), cands.end(), [](const ScoredItem* a, const ScoredItem* b) {
                return more_certain(a->gamma, a->stable_id, b->gamma, b->stable_id);
            });
            const int take = std::min<int>(quota, static_cast<int>(cands.size()));
            for (int i = 0; i < take; ++i) {
                const auto* it = cands[static_cast<std::size_t>(i)];
                result.per_language[l].push_back({it->stable_id, {it->predicted}, it->gamma});
            }
            result.quotas.push_back({static_cast<int>(l), c, quota, take,
                                     take > 0 ? cands[static_cast<std::size_t>(take - 1)]->gamma
                                              : std::numeric_limits<double>::quiet_NaN()});
        }
    }
    return result;
}

std::vector<ScoredEntity> score_entities(const LabelSet& labels, const ScoredSequence& seq) {
    if (seq.tags.size() != seq.token_gamma.size()) {
        throw std::invalid_argument("score_entities: tag/gamma length mismatch");
    }
    std::vector<ScoredEntity> out;
    for (const Span& sp : decode_spans(labels, seq.tags)) {
        double sum = 0.0;
        for (int t = sp.begin; t < sp.end; ++t) sum += seq.token_gamma[static_cast<std::size_t>(t)];
        out.push_back({sp, sum / static_cast<double>(sp.end - sp.begin)});
    }
    return out;
}

SelectionResult select_tagging(const LabelSet& labels,
                               const std::vector<std::vector<ScoredSequence>>& scored,
                               const SelectionConfig& cfg) {
    cfg.validate();
    const int types = static_cast<int>(labels.entity_types().size());
    SelectionResult result;
    result.per_language.resize(scored.size());
    for (std::size_t l = 0; l < scored.size(); ++l) {
        const auto& seqs = scored[l];
        std::vector<std::vector<ScoredEntity>> entities(seqs.size());
        std::vector<std::vector<EntityKey>> by_type(static_cast<std::size_t>(types));
        for (std::size_t s = 0; s < seqs.size(); ++s) {
            entities[s] = score_entities(labels, seqs[s]);
            for (const auto& e : entities[s]) {
                if (!std::isfinite(e.gamma)) throw std::invalid_argument("select_tagging: non-finite gamma");
                by_type[static_cast<std::size_t>(e.span.type)].push_back(
                    {e.gamma, seqs[s].stable_id, e.span.begin});
            }
        }
        // An entity passes when its key ranks within the first q of its type.
        std::vector<int> quota(static_cast<std::size_t>(types), 0);
        std::vector<EntityKey> cutoff(static_cast<std::size_t>(types));
        for (int t = 0; t < types; ++t) {
            auto& v = by_type[static_cast<std::size_t>(t)];
            std::sort(v.begin(), v.end());
            quota[static_cast<std::size_t>(t)] = selection_quota(cfg.top_k_percent, v.size());
            if (quota[static_cast<std::size_t>(t)] > 0) {
                cutoff[static_cast<std::size_t>(t)] = v[static_cast<std::size_t>(quota[static_cast<std::size_t>(t)] - 1)];
            }
        }
        std::vector<int> taken(static_cast<std::size_t>(types), 0);
        for (std::size_t s = 0; s < seqs.size(); ++s) {
            if (entities[s].empty()) continue;
            bool ok = true;
            for (const auto& e : entities[s]) {
                auto t = static_cast<std::size_t>(e.span.type);
                if (quota[t] == 0 || cutoff[t] < EntityKey{e.gamma, seqs[s].stable_id, e.span.begin}) {
                    ok = false;
                    break;
                }
            }
            if (!ok) continue;
            double worst = -std::numeric_limits<double>::infinity();
            for (const auto& e : entities[s]) {
                worst = std::max(worst, e.gamma);
                ++taken[static_cast<std::size_t>(e.span.type)];
            }
            result.per_language[l].push_back({seqs[s].stable_id, seqs[s].tags, worst});
        }
        if (seqs.empty()) continue;
        for (int t = 0; t < types; ++t) {
            auto ut = static_cast<std::size_t>(t);
            result.quotas.push_back({static_cast<int>(l), t, quota[ut], taken[ut],
                                     quota[ut] > 0 ? cutoff[ut].gamma : std::numeric_limits<double>::quiet_NaN()});
        }
    }
    return result;
}

void write_selection_audit(std::ostream& os, const Pool& pool, const SelectionResult& result) {
    os << "language,label,quota,taken,threshold_gamma\n";
    for (const auto& q : result.quotas) {
        const std::string& label = pool.labels.task() == Task::Tagging
                                       ? pool.labels.entity_types().at(static_cast<std::size_t>(q.label))
                                       : pool.labels.name_of(q.label);
        os << pool.languages.at(static_cast<std::size_t>(q.language)).name << ',' << label << ','
           << q.quota << ',' << q.taken << ',';
        if (!std::isnan(q.threshold_gamma)) os << nlohmann::json(q.threshold_gamma).dump();
        os << "\n";
    }
}

}  // namespace selflearn
