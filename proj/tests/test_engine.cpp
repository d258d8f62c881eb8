#include <doctest.h>

#include <algorithm>
#include <set>

#include <json.hpp>

#include "helpers.hpp"
#include "selflearn/engine.hpp"
#include "selflearn/synthdata.hpp"

using namespace selflearn;

namespace {

Pool small_xnli(std::uint64_t seed) {
    SynthConfig c = desk_classification_config(seed);
    c.source_sizes = {150, 0, 60, 60};
    c.target_sizes = {0, 150, 0, 60};
    return generate(c, default_shifts(c, {20.0, 50.0}, 2.0));
}

Pool small_ner(std::uint64_t seed) {
    SynthConfig c = desk_tagging_config(seed);
    c.source_sizes = {80, 0, 30, 30};
    c.target_sizes = {0, 200, 0, 30};
    return generate(c, default_shifts(c, {20.0}, 2.0));
}

EngineConfig quick(std::uint64_t seed) {
    EngineConfig e;
    e.seed = seed;
    e.train.seed = seed;
    e.model.hidden = 16;
    e.loop.max_iterations = 4;
    return e;
}

std::vector<const Example*> ptrs(const std::vector<Example>& v) {
    std::vector<const Example*> out;
    for (const auto& e : v) out.push_back(&e);
    return out;
}

}  // namespace

TEST_SUITE("engine") {

TEST_CASE("epoch dataset: fresh items plus an equal sample of the existing set") {
    Pool p = testing_util::tiny_classification_pool();
    auto existing = ptrs(p.data[0].train);  // 6
    auto fresh_all = ptrs(p.data[1].test);   // 6
    Rng r(1);
    CHECK(build_epoch_dataset(existing, {}, r) == existing);

    std::vector<const Example*> fresh(fresh_all.begin(), fresh_all.begin() + 2);
    for (int trial = 0; trial < 50; ++trial) {
        auto out = build_epoch_dataset(existing, fresh, r);
        REQUIRE(out.size() == 4);
        std::set<const Example*> seen(out.begin(), out.end());
        CHECK(seen.size() == 4);
        for (auto* f : fresh) CHECK(seen.count(f) == 1);
        int old = 0;
        for (auto* e : out) old += std::count(existing.begin(), existing.end(), e) > 0;
        CHECK(old == 2);
    }
    // more fresh than existing: everything is used once
    auto out = build_epoch_dataset(fresh, fresh_all, r);
    CHECK(out.size() == 8);

    Rng a(5), b(5);
    CHECK(build_epoch_dataset(existing, fresh, a) == build_epoch_dataset(existing, fresh, b));
}

TEST_CASE("epoch dataset resamples the existing part") {
    Pool p = testing_util::tiny_classification_pool();
    auto existing = ptrs(p.data[0].train);
    std::vector<const Example*> fresh{&p.data[1].test[0]};
    Rng r(2);
    std::set<const Example*> used;
    for (int i = 0; i < 100; ++i) {
        for (auto* e : build_epoch_dataset(existing, fresh, r)) used.insert(e);
    }
    CHECK(used.size() == 7);
}

TEST_CASE("early stopping") {
    CHECK_FALSE(early_stop({0.5}));
    CHECK_FALSE(early_stop({0.5, 0.6, 0.7}));
    CHECK_FALSE(early_stop({0.7, 0.6}));
    CHECK(early_stop({0.7, 0.6, 0.65}));
    CHECK(early_stop({70, 71, 70.5, 70.9}));
    CHECK_FALSE(early_stop({70, 71}));
    // a tie is not an improvement
    CHECK(early_stop({0.5, 0.8, 0.8, 0.8}));
    CHECK_FALSE(early_stop({0.5, 0.8, 0.8, 0.9}));
    CHECK(early_stop({0.9, 0.8}, 1));
    CHECK_THROWS(early_stop({}));
}

TEST_CASE("mode labels") {
    CHECK(RunMode::direct().label() == "BL-Direct");
    CHECK(RunMode::single(2).label() == "BL-Single");
    CHECK(RunMode::joint().label() == "BL-Joint");
    EstimatorConfig e;
    e.kind = EstimatorKind::EVI;
    CHECK(RunMode::with_uncertainty(e).label() == "SL-EVI");
    CHECK(RunMode::joint().scoring_estimator().kind == EstimatorKind::MPR);
    CHECK(RunMode::with_uncertainty(e).scoring_estimator().kind == EstimatorKind::EVI);
}

TEST_CASE("direct mode trains once on the source") {
    Pool p = small_xnli(1);
    auto res = run(p, RunMode::direct(), quick(1));
    CHECK(res.iterations == 1);
    CHECK(res.stop_reason == "direct");
    CHECK(res.selections.empty());
    CHECK(res.reports.size() == 3);
    for (const auto& r : res.reports) {
        CHECK(r.silver_size == 0);
        CHECK(r.dev_metric.has_value() == r.is_source);
        CHECK(r.test_metric >= 0.0);
        CHECK(r.test_metric <= 1.0);
    }
    CHECK(res.final_metrics().size() == 3);
    CHECK(res.final_metrics()[0] > 0.8);
}

TEST_CASE("joint mode adds every target item once") {
    Pool p = small_xnli(2);
    auto res = run(p, RunMode::joint(), quick(2));
    CHECK(res.iterations == 2);
    CHECK(res.stop_reason == "exhausted");
    REQUIRE(res.selections.size() == 1);
    CHECK(res.selections[0].total() == 300);
    for (int t : res.pool.targets()) {
        const auto& d = res.pool.data[static_cast<std::size_t>(t)];
        CHECK(d.unlabeled.empty());
        CHECK(d.train.size() == 150);
        for (const auto& ex : d.train) CHECK(ex.provenance == Provenance{Provenance::Kind::Silver, 2});
    }
    // silver precision is reported for the iteration the items entered
    for (const auto& r : res.reports) {
        if (r.iteration == 2 && !r.is_source) {
            CHECK(r.silver_added == 150);
            REQUIRE(r.silver_precision.has_value());
        }
        if (r.iteration == 1) CHECK_FALSE(r.silver_precision.has_value());
    }
}

TEST_CASE("self-learning grows each target by at most its quota per round") {
    SynthConfig c = desk_classification_config(9);
    c.source_sizes = {150, 0, 60, 60};
    c.target_sizes = {0, 100, 0, 30};
    Pool p = generate(c, desk_classification_shifts(c));
    EstimatorConfig est;
    est.kind = EstimatorKind::LEU;
    auto cfg = quick(9);
    cfg.loop.max_iterations = 2;
    auto res = run(p, RunMode::with_uncertainty(est), cfg);
    REQUIRE(res.selections.size() == 1);
    for (int t : p.targets()) {
        CHECK(res.selections[0].per_language[static_cast<std::size_t>(t)].size() <= 24);
        CHECK(res.pool.data[static_cast<std::size_t>(t)].train.size() <= 24);
    }
}

TEST_CASE("single mode only touches its target") {
    Pool p = small_xnli(3);
    auto res = run(p, RunMode::single(2), quick(3));
    CHECK(res.pool.data[1].unlabeled.size() == 150);
    CHECK(res.pool.data[1].train.empty());
    CHECK(res.pool.data[2].unlabeled.empty());
    CHECK_THROWS(run(p, RunMode::single(0), quick(3)));
    CHECK_THROWS(run(p, RunMode::single(7), quick(3)));
}

TEST_CASE("self-learning grows the training set from the most certain items") {
    Pool p = small_xnli(4);
    EstimatorConfig est;
    est.kind = EstimatorKind::LEU;
    auto cfg = quick(4);
    cfg.selection.top_k_percent = 10.0;
    auto res = run(p, RunMode::with_uncertainty(est), cfg);
    CHECK(res.iterations >= 2);
    CHECK(res.iterations <= 4);
    CHECK(res.selections.size() >= 1);
    std::size_t silver = 0;
    for (int t : res.pool.targets()) silver += res.pool.data[static_cast<std::size_t>(t)].train.size();
    std::size_t selected = 0;
    for (std::size_t i = 0; i < res.selections.size(); ++i) selected += res.selections[i].total();
    CHECK(silver == selected);
    // each round takes at most 10% per class per language
    for (const auto& q : res.selections[0].quotas) CHECK(q.taken <= q.quota);
    CHECK(res.dev_history.size() == static_cast<std::size_t>(res.iterations));
    // the input pool is not modified
    CHECK(p == small_xnli(4));
}

TEST_CASE("runs are reproducible") {
    Pool p = small_ner(5);
    EstimatorConfig est;
    est.kind = EstimatorKind::LEU;
    est.mc_samples = 5;
    auto cfg = quick(5);
    cfg.loop.max_iterations = 3;
    auto a = run(p, RunMode::with_uncertainty(est), cfg);
    auto b = run(p, RunMode::with_uncertainty(est), cfg);
    REQUIRE(a.reports.size() == b.reports.size());
    for (std::size_t i = 0; i < a.reports.size(); ++i) CHECK(report_to_json(a.reports[i]) == report_to_json(b.reports[i]));
    CHECK(a.model == b.model);
    cfg.seed = 6;
    auto c = run(p, RunMode::with_uncertainty(est), cfg);
    CHECK_FALSE(c.model == a.model);
}

TEST_CASE("tagging runs report span F1 and select whole sequences") {
    Pool p = small_ner(6);
    EstimatorConfig est;
    est.kind = EstimatorKind::EVI;
    est.evi_alpha = 0.01;
    auto cfg = quick(6);
    cfg.selection.top_k_percent = 20.0;
    auto res = run(p, RunMode::with_uncertainty(est), cfg);
    for (const auto& r : res.reports) CHECK(r.metric_name == "span_f1");
    for (const auto& ex : res.pool.data[1].train) {
        CHECK(ex.labels.size() == ex.length());
        CHECK_FALSE(decode_spans(res.pool.labels, ex.labels).empty());
    }
}

TEST_CASE("evaluation of a split") {
    Pool p = small_ner(7);
    Rng r(1);
    Model m = Model::initialized(ModelShape{8, 8, p.labels.size(), p.num_languages(), Activation::Tanh}, r);
    EstimatorConfig est;
    auto ev = evaluate_split(m, p, 1, Split::Test, est, 3);
    std::size_t tokens = 0;
    for (const auto& ex : p.data[1].test) tokens += ex.length();
    CHECK(ev.stable_ids.size() == tokens);
    CHECK(ev.predicted.size() == tokens);
    CHECK(ev.gold.size() == tokens);
    CHECK(ev.scores.size() == tokens);
    CHECK(ev.metric >= 0.0);
    auto serial = evaluate_split(m, p, 1, Split::Test, est, 3, Exec::Serial);
    CHECK(serial.metric == ev.metric);
}

TEST_CASE("divergence aborts with the partial state") {
    Pool p = small_xnli(8);
    auto cfg = quick(8);
    cfg.train.learning_rate = 1e300;
    cfg.train.max_grad_norm = 1e300;
    EstimatorConfig est;
    est.kind = EstimatorKind::LEU;
    try {
        run(p, RunMode::with_uncertainty(est), cfg);
        FAIL("expected RunAborted");
    } catch (const RunAborted& e) {
        CHECK(std::string(e.what()).find("iteration 1") != std::string::npos);
        CHECK(e.partial().stop_reason == "aborted");
        CHECK(e.partial().pool == p);
    }
}

TEST_CASE("report json") {
    IterationReport r;
    r.iteration = 2;
    r.language_name = "t1";
    r.metric_name = "accuracy";
    r.test_metric = 0.5;
    r.silver_precision = 0.75;
    auto j = nlohmann::json::parse(report_to_json(r));
    CHECK(j["iteration"] == 2);
    CHECK(j["language"] == "t1");
    CHECK(j["dev"].is_null());
    CHECK(j["silver_precision"] == 0.75);
}

}
