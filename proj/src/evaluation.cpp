#include "selflearn/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <set>

#include <json.hpp>

namespace selflearn {

double auroc(const std::vector<AurocSample>& samples) {
    long positives = 0;
    for (const auto& s : samples) {
        if (!std::isfinite(s.gamma)) throw std::invalid_argument("auroc: non-finite gamma");
        positives += s.correct ? 1 : 0;
    }
    const long n = static_cast<long>(samples.size());
    const long negatives = n - positives;
    if (positives == 0 || negatives == 0) {
        throw UndefinedMetric("auroc needs both correct and incorrect predictions");
    }
    // Rank by confidence (-gamma) ascending, i.e. gamma descending.
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return samples[a].gamma > samples[b].gamma; });
    double rank_sum = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && samples[order[j + 1]].gamma == samples[order[i]].gamma) ++j;
        double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            if (samples[order[k]].correct) rank_sum += midrank;
        }
        i = j + 1;
    }
    const double p = static_cast<double>(positives);
    double u = rank_sum - p * (p + 1.0) / 2.0;
    return u / (p * static_cast<double>(negatives));
}

PRF prf_from_counts(long tp, long predicted, long gold) {
    PRF r;
    r.true_positive = tp;
    r.predicted = predicted;
    r.gold = gold;
    r.precision = predicted > 0 ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
    r.recall = gold > 0 ? static_cast<double>(tp) / static_cast<double>(gold) : 0.0;
    r.f1 = (r.precision + r.recall) > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
    return r;
}

PRF span_f1(const std::vector<std::vector<Span>>& gold, const std::vector<std::vector<Span>>& pred) {
    if (gold.size() != pred.size()) throw std::invalid_argument("span_f1: sequence count mismatch");
    long tp = 0, np = 0, ng = 0;
    for (std::size_t s = 0; s < gold.size(); ++s) {
        std::set<Span> g(gold[s].begin(), gold[s].end());
        ng += static_cast<long>(gold[s].size());
        np += static_cast<long>(pred[s].size());
        for (const auto& sp : pred[s]) tp += g.count(sp) ? 1 : 0;
    }
    return prf_from_counts(tp, np, ng);
}

double accuracy(const std::vector<int>& gold, const std::vector<int>& pred) {
    if (gold.size() != pred.size()) throw std::invalid_argument("accuracy: length mismatch");
    if (gold.empty()) throw std::invalid_argument("accuracy: empty input");
    long hits = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) hits += gold[i] == pred[i] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(gold.size());
}

std::vector<Histogram> gamma_histogram(const std::vector<std::string>& languages,
                                       const std::vector<std::vector<double>>& scores, int bins) {
    if (bins < 1) throw std::invalid_argument("gamma_histogram: bins must be >= 1");
    if (languages.size() != scores.size()) throw std::invalid_argument("gamma_histogram: size mismatch");
    std::vector<Histogram> out;
    for (std::size_t l = 0; l < scores.size(); ++l) {
        Histogram h;
        h.language = languages[l];
        h.counts.assign(static_cast<std::size_t>(bins), 0);
        const auto& v = scores[l];
        if (!v.empty()) {
            auto [lo, hi] = std::minmax_element(v.begin(), v.end());
            h.low = *lo;
            h.high = *hi;
            const double width = (h.high - h.low) / bins;
            for (double g : v) {
                int b = width > 0.0 ? static_cast<int>((g - h.low) / width) : 0;
                b = std::clamp(b, 0, bins - 1);
                ++h.counts[static_cast<std::size_t>(b)];
            }
        }
        out.push_back(std::move(h));
    }
    return out;
}

void write_histogram_csv(std::ostream& os, const std::vector<Histogram>& hists) {
    os << "language,bin,bin_low,bin_high,count\n";
    for (const auto& h : hists) {
        const int bins = static_cast<int>(h.counts.size());
        const double width = (h.high - h.low) / bins;
        for (int b = 0; b < bins; ++b) {
            double lo = h.low + b * width;
            double hi = b + 1 == bins ? h.high : h.low + (b + 1) * width;
            os << h.language << ',' << b << ',' << nlohmann::json(lo).dump() << ','
               << nlohmann::json(hi).dump() << ',' << h.counts[static_cast<std::size_t>(b)] << "\n";
        }
    }
}

}  // namespace selflearn
