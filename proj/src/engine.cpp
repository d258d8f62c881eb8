#include "selflearn/engine.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include <json.hpp>

#include "selflearn/evaluation.hpp"

namespace selflearn {

EstimatorConfig RunMode::scoring_estimator() const {
    if (kind == Kind::JointWithUncertainty) return estimator;
    EstimatorConfig e;
    e.kind = EstimatorKind::MPR;
    return e;
}

std::string RunMode::label() const {
    switch (kind) {
        case Kind::Direct: return "BL-Direct";
        case Kind::SingleLanguage: return "BL-Single";
        case Kind::Joint: return "BL-Joint";
        case Kind::JointWithUncertainty: return "SL-" + to_string(estimator.kind);
    }
    return "?";
}

std::string report_to_json(const IterationReport& r) {
    nlohmann::ordered_json j;
    j["iteration"] = r.iteration;
    j["language"] = r.language_name;
    j["is_source"] = r.is_source;
    j["metric"] = r.metric_name;
    j["test"] = r.test_metric;
    j["dev"] = r.dev_metric ? nlohmann::ordered_json(*r.dev_metric) : nlohmann::ordered_json(nullptr);
    j["auroc"] = r.auroc ? nlohmann::ordered_json(*r.auroc) : nlohmann::ordered_json(nullptr);
    j["train_size"] = r.train_size;
    j["silver_size"] = r.silver_size;
    j["unlabeled_size"] = r.unlabeled_size;
    j["silver_added"] = r.silver_added;
    j["silver_precision"] =
        r.silver_precision ? nlohmann::ordered_json(*r.silver_precision) : nlohmann::ordered_json(nullptr);
    j["mean_train_loss"] = r.mean_train_loss;
    j["lou_sigma2"] = r.lou_sigma2;
    return j.dump();
}

std::vector<double> RunResult::final_metrics() const {
    std::vector<double> out;
    for (const auto& r : reports) {
        if (r.iteration == iterations) out.push_back(r.test_metric);
    }
    return out;
}

double RunResult::mean_target_metric(const Pool& p) const {
    double sum = 0.0;
    int n = 0;
    for (const auto& r : reports) {
        if (r.iteration == iterations && r.language != p.source) {
            sum += r.test_metric;
            ++n;
        }
    }
    return n > 0 ? sum / n : 0.0;
}

std::vector<const Example*> build_epoch_dataset(const std::vector<const Example*>& existing,
                                                const std::vector<const Example*>& fresh, Rng& rng) {
    if (fresh.empty()) return existing;
    std::vector<const Example*> out = fresh;
    std::vector<const Example*> old = existing;
    const std::size_t take = std::min(old.size(), fresh.size());
    // partial Fisher-Yates: the first `take` slots become a uniform sample
    for (std::size_t i = 0; i < take; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng.below(old.size() - i));
        std::swap(old[i], old[j]);
        out.push_back(old[i]);
    }
    rng.shuffle(out);
    return out;
}

bool early_stop(const std::vector<double>& history, int patience) {
    if (history.empty()) throw std::invalid_argument("early_stop: empty history");
    std::size_t best = 0;
    for (std::size_t i = 1; i < history.size(); ++i) {
        if (history[i] > history[best]) best = i;
    }
    return static_cast<int>(history.size() - 1 - best) >= patience;
}

SplitEvaluation evaluate_split(const Model& model, const Pool& pool, int language, Split split,
                               const EstimatorConfig& est, std::uint64_t seed, Exec exec) {
    const auto& examples = pool.data.at(static_cast<std::size_t>(language)).part(split);
    auto items = score_items_for(examples);
    auto scores = score_items(model, items, est, seed, exec);

    SplitEvaluation ev;
    std::vector<AurocSample> samples;
    bool all_gold = true;
    std::size_t k = 0;
    std::vector<std::vector<Span>> gold_spans, pred_spans;
    for (const auto& ex : examples) {
        const auto& gold = evaluation_gold(ex);
        std::vector<int> pred_tags;
        for (std::size_t t = 0; t < ex.tokens.size(); ++t, ++k) {
            ev.stable_ids.push_back(ex.stable_id);
            ev.tokens.push_back(static_cast<int>(t));
            ev.predicted.push_back(scores[k].predicted);
            ev.scores.push_back(scores[k].score);
            int g = gold.empty() ? -1 : gold[t];
            ev.gold.push_back(g);
            pred_tags.push_back(scores[k].predicted);
            if (g >= 0) samples.push_back({scores[k].score.gamma, g == scores[k].predicted});
        }
        all_gold = all_gold && !gold.empty();
        if (pool.labels.task() == Task::Tagging && !gold.empty()) {
            gold_spans.push_back(decode_spans(pool.labels, gold));
            pred_spans.push_back(decode_spans(pool.labels, pred_tags));
        }
    }
    if (!examples.empty() && all_gold) {
        if (pool.labels.task() == Task::Tagging) {
            ev.metric = span_f1(gold_spans, pred_spans).f1;
        } else {
            ev.metric = accuracy(ev.gold, ev.predicted);
        }
    }
    try {
        if (!samples.empty()) ev.auroc = auroc(samples);
    } catch (const UndefinedMetric&) {
        ev.auroc.reset();
    }
    return ev;
}

namespace {

constexpr std::uint64_t kTrainStream = 1;
constexpr std::uint64_t kEvalStream = 2;
constexpr std::uint64_t kScoreStream = 3;
constexpr std::uint64_t kInitStream = 4;

std::optional<double> silver_precision(const Pool& pool, const std::vector<const Example*>& items) {
    if (items.empty()) return std::nullopt;
    if (pool.labels.task() == Task::Tagging) {
        long tp = 0, np = 0;
        for (const Example* ex : items) {
            const auto& gold = evaluation_gold(*ex);
            if (gold.empty()) return std::nullopt;
            auto g = decode_spans(pool.labels, gold);
            std::sort(g.begin(), g.end());
            for (const auto& sp : decode_spans(pool.labels, ex->labels)) {
                ++np;
                tp += std::binary_search(g.begin(), g.end(), sp) ? 1 : 0;
            }
        }
        return np > 0 ? std::optional<double>(static_cast<double>(tp) / static_cast<double>(np)) : std::nullopt;
    }
    long hits = 0;
    for (const Example* ex : items) {
        const auto& gold = evaluation_gold(*ex);
        if (gold.empty()) return std::nullopt;
        hits += gold[0] == ex->labels[0] ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(items.size());
}

std::vector<std::vector<ScoredItem>> score_classification(const Model& model, const Pool& pool,
                                                          const std::vector<int>& langs,
                                                          const EstimatorConfig& est, std::uint64_t seed) {
    std::vector<std::vector<ScoredItem>> out(pool.data.size());
    for (int l : langs) {
        const auto& unl = pool.data[static_cast<std::size_t>(l)].unlabeled;
        auto items = score_items_for(unl);
        auto scores = score_items(model, items, est, seed, Exec::Parallel);
        for (std::size_t i = 0; i < unl.size(); ++i) {
            out[static_cast<std::size_t>(l)].push_back({unl[i].stable_id, scores[i].predicted, scores[i].score.gamma});
        }
    }
    return out;
}

std::vector<std::vector<ScoredSequence>> score_tagging(const Model& model, const Pool& pool,
                                                       const std::vector<int>& langs,
                                                       const EstimatorConfig& est, std::uint64_t seed) {
    std::vector<std::vector<ScoredSequence>> out(pool.data.size());
    for (int l : langs) {
        const auto& unl = pool.data[static_cast<std::size_t>(l)].unlabeled;
        auto items = score_items_for(unl);
        auto scores = score_items(model, items, est, seed, Exec::Parallel);
        std::size_t k = 0;
        for (const auto& ex : unl) {
            ScoredSequence seq;
            seq.stable_id = ex.stable_id;
            for (std::size_t t = 0; t < ex.tokens.size(); ++t, ++k) {
                seq.tags.push_back(scores[k].predicted);
                seq.token_gamma.push_back(scores[k].score.gamma);
            }
            out[static_cast<std::size_t>(l)].push_back(std::move(seq));
        }
    }
    return out;
}

SelectionResult select_everything(const Model& model, const Pool& pool, const std::vector<int>& langs,
                                  std::uint64_t seed) {
    EstimatorConfig plain;
    plain.kind = EstimatorKind::MPR;
    SelectionResult sel;
    sel.per_language.resize(pool.data.size());
    for (int l : langs) {
        const auto& unl = pool.data[static_cast<std::size_t>(l)].unlabeled;
        auto items = score_items_for(unl);
        auto scores = score_items(model, items, plain, seed, Exec::Parallel);
        std::size_t k = 0;
        for (const auto& ex : unl) {
            SelectedItem it;
            it.stable_id = ex.stable_id;
            double worst = -1.0;
            for (std::size_t t = 0; t < ex.tokens.size(); ++t, ++k) {
                it.silver.push_back(scores[k].predicted);
                worst = std::max(worst, scores[k].score.gamma);
            }
            it.gamma = worst;
            sel.per_language[static_cast<std::size_t>(l)].push_back(std::move(it));
        }
    }
    return sel;
}

}  // namespace

RunResult run(const Pool& input, const RunMode& mode, const EngineConfig& cfg) {
    input.validate();
    cfg.train.validate();
    cfg.selection.validate();
    const EstimatorConfig scoring = mode.scoring_estimator();
    scoring.validate();
    if (mode.kind == RunMode::Kind::SingleLanguage &&
        (mode.target < 0 || mode.target >= input.num_languages() || mode.target == input.source)) {
        throw std::invalid_argument("single-language mode needs a target other than the source");
    }
    const bool tagging = input.labels.task() == Task::Tagging;
    std::vector<int> selectable;
    if (mode.kind == RunMode::Kind::SingleLanguage) {
        selectable = {mode.target};
    } else if (mode.kind != RunMode::Kind::Direct) {
        selectable = input.targets();
    }

    RunResult res;
    res.pool = input;
    Rng init_rng = Rng::substream(cfg.seed, kInitStream);
    ModelShape shape;
    shape.input_dim = static_cast<int>(input.data[static_cast<std::size_t>(input.source)].train.front().tokens.front().size());
    shape.hidden = cfg.model.hidden;
    shape.classes = input.labels.size();
    shape.languages = input.num_languages();
    shape.activation = cfg.model.activation;
    res.model = Model::initialized(shape, init_rng, cfg.model.logvar_init);

    const LossSpec loss{training_loss(scoring.kind), scoring.mc_samples};
    Rng train_rng = Rng::substream(cfg.seed, kTrainStream);
    std::unordered_set<std::int64_t> fresh_ids;

    for (int iteration = 1;; ++iteration) {
        res.iterations = iteration;
        // ---- training
        std::vector<const Example*> existing, fresh;
        for (const auto& lang : res.pool.data) {
            for (const auto& ex : lang.train) {
                (fresh_ids.count(ex.stable_id) ? fresh : existing).push_back(&ex);
            }
        }
        const int epochs = iteration == 1 ? cfg.train.epochs_first : cfg.train.epochs_later;
        double loss_sum = 0.0;
        for (int e = 0; e < epochs; ++e) {
            auto epoch_examples = build_epoch_dataset(existing, fresh, train_rng);
            auto items = flatten_items(epoch_examples);
            train_rng.shuffle(items);
            const double steps = std::ceil(static_cast<double>(items.size()) / cfg.train.batch_size);
            EpochSchedule sched;
            sched.lr_scale_begin = 1.0 - static_cast<double>(e) / epochs;
            sched.lr_scale_end = 1.0 - (e + (steps - 1.0) / steps) / epochs;
            try {
                loss_sum += train_epoch(res.model, items, loss, cfg.train, train_rng, sched).mean_loss;
            } catch (const NumericError& err) {
                res.stop_reason = "aborted";
                throw RunAborted(std::string(err.what()) + " (iteration " + std::to_string(iteration) +
                                     ", epoch " + std::to_string(e + 1) + ")",
                                 std::move(res));
            }
        }
        const double mean_loss = loss_sum / epochs;

        // ---- evaluation
        const std::uint64_t eval_seed = mix64(cfg.seed ^ mix64(kEvalStream + 16 * static_cast<std::uint64_t>(iteration)));
        for (const auto& lang : res.pool.languages) {
            IterationReport r;
            r.iteration = iteration;
            r.language = lang.id;
            r.language_name = lang.name;
            r.is_source = lang.id == res.pool.source;
            r.metric_name = tagging ? "span_f1" : "accuracy";
            auto test = evaluate_split(res.model, res.pool, lang.id, Split::Test, scoring, eval_seed);
            r.test_metric = test.metric;
            r.auroc = test.auroc;
            if (r.is_source) {
                r.dev_metric = evaluate_split(res.model, res.pool, lang.id, Split::Dev, scoring, eval_seed).metric;
                res.dev_history.push_back(*r.dev_metric);
            }
            const auto& data = res.pool.data[static_cast<std::size_t>(lang.id)];
            r.train_size = data.train.size();
            r.silver_size = static_cast<std::size_t>(std::count_if(data.train.begin(), data.train.end(), [](const Example& ex) {
                return ex.provenance.kind == Provenance::Kind::Silver;
            }));
            r.unlabeled_size = data.unlabeled.size();
            std::vector<const Example*> mine;
            for (const Example* ex : fresh) {
                if (ex->language == lang.id) mine.push_back(ex);
            }
            r.silver_added = mine.size();
            r.silver_precision = silver_precision(res.pool, mine);
            r.mean_train_loss = mean_loss;
            r.lou_sigma2 = std::exp(2.0 * res.model.lou_logsigma(lang.id));
            res.reports.push_back(std::move(r));
        }

        // ---- stopping
        if (mode.kind == RunMode::Kind::Direct) {
            res.stop_reason = "direct";
            break;
        }
        if (early_stop(res.dev_history, cfg.loop.patience)) {
            res.stop_reason = "early-stop";
            break;
        }
        std::size_t remaining = 0;
        for (int l : selectable) remaining += res.pool.data[static_cast<std::size_t>(l)].unlabeled.size();
        if (remaining == 0) {
            res.stop_reason = "exhausted";
            break;
        }
        if (iteration >= cfg.loop.max_iterations) {
            res.stop_reason = "max-iterations";
            break;
        }

        // ---- prediction, estimation, selection
        const std::uint64_t score_seed = mix64(cfg.seed ^ mix64(kScoreStream + 16 * static_cast<std::uint64_t>(iteration)));
        SelectionResult sel;
        if (mode.kind == RunMode::Kind::JointWithUncertainty) {
            sel = tagging ? select_tagging(res.pool.labels, score_tagging(res.model, res.pool, selectable, scoring, score_seed),
                                           cfg.selection)
                          : select_classification(score_classification(res.model, res.pool, selectable, scoring, score_seed),
                                                  res.pool.labels.size(), cfg.selection);
        } else {
            sel = select_everything(res.model, res.pool, selectable, score_seed);
        }
        if (sel.total() == 0) {
            res.selections.push_back(std::move(sel));
            res.stop_reason = "empty-selection";
            break;
        }
        fresh_ids.clear();
        for (const auto& per : sel.per_language) {
            for (const auto& it : per) fresh_ids.insert(it.stable_id);
        }
        res.pool = move_to_train(std::move(res.pool), sel, iteration + 1);
        res.selections.push_back(std::move(sel));
    }
    return res;
}

}  // namespace selflearn
