// Acceptance checks 1-8. One PASS/FAIL line per criterion; exit status is
// non-zero if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>

#include "gradcheck.hpp"
#include "selflearn/evaluation.hpp"
#include "selflearn/experiment.hpp"
#include "selflearn/selection.hpp"

using namespace selflearn;
using namespace testing_util;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

constexpr int kSeeds = 5;

int failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail) {
    std::printf("%s %d %s: %s\n", ok ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// ---- 1
void gradients() {
    auto t0 = Clock::now();
    Rng r(2718);
    double worst = 0.0;
    std::string worst_kind;
    for (auto kind : {LossKind::CrossEntropy, LossKind::Heteroscedastic, LossKind::Homoscedastic, LossKind::Evidential}) {
        for (int i = 0; i < 20; ++i) {
            auto p = random_point(r, 2 + static_cast<int>(r.below(5)));
            double e = head_gradient_error(kind, p, 500 + static_cast<std::uint64_t>(i));
            if (e > worst) {
                worst = e;
                worst_kind = to_string(kind);
            }
        }
    }
    const double secs = seconds_since(t0);
    report(1, worst < 1e-4 && secs < 30.0, "gradients vs central differences",
           "max rel err " + fmt("%.2e", worst) + " (" + worst_kind + "), " + fmt("%.2f s", secs));
}

// ---- 2
void identities() {
    std::vector<std::string> broken;
    auto expect = [&](bool ok, const std::string& name) {
        if (!ok) broken.push_back(name);
    };
    Rng r(31);
    for (int i = 0; i < 200; ++i) {
        auto p = random_point(r, 2 + static_cast<int>(r.below(6)));
        Evidence ev = evi_from_raw(p.logits);
        const double C = static_cast<double>(p.logits.size());
        double bsum = 0.0;
        bool probs_ok = true;
        for (std::size_t c = 0; c < ev.belief.size(); ++c) {
            bsum += ev.belief[c];
            probs_ok &= std::abs(ev.probs[c] - (ev.evidence[c] + 1.0) / ev.strength) < 1e-12;
        }
        expect(std::abs(ev.vacuity - C / ev.strength) < 1e-12, "vacuity = |C|/S");
        expect(std::abs(bsum + ev.vacuity - 1.0) < 1e-12, "sum b + u = 1");
        expect(probs_ok, "p = (e+1)/S");
        expect(std::abs(lou_loss(p.logits, p.gold, 0.0) - ce_loss(p.logits, p.gold)) < 1e-12, "LOU(sigma=1) = CE");
        Rng noise(static_cast<std::uint64_t>(i));
        Vec lv(p.logits.size(), -40.0);
        expect(std::abs(leu_loss(p.logits, lv, p.gold, 20, noise) - ce_loss(p.logits, p.gold)) < 1e-6,
               "LEU(logvar=-40) = CE");
    }
    expect(std::abs(evi_dissonance(Vec{0.25, 0.25, 0.25}) - 0.75) < 1e-15, "diss(.25,.25,.25) = .75");
    expect(std::abs(evi_loss(Vec{-60.0, -60.0, -60.0}, 0) - 5.0 / 6.0) < 1e-12, "zero-evidence EVI loss = 5/6");
    std::set<std::string> uniq(broken.begin(), broken.end());
    std::string detail = uniq.empty() ? "all 7 identities hold" : "";
    for (const auto& b : uniq) detail += "broken: " + b + "; ";
    report(2, uniq.empty(), "estimator identities", detail);
}

// ---- 3
void auroc_exact() {
    Rng r(99);
    int cases = 0, mismatches = 0;
    while (cases < 1000) {
        const int n = 2 + static_cast<int>(r.below(11));
        std::vector<AurocSample> s;
        int pos = 0;
        for (int i = 0; i < n; ++i) {
            bool c = r.below(2) == 1;
            pos += c;
            s.push_back({static_cast<double>(r.below(6)) * 0.25, c});
        }
        if (pos == 0 || pos == n) continue;
        double num = 0.0, pairs = 0.0;
        for (const auto& a : s) {
            for (const auto& b : s) {
                if (!a.correct || b.correct) continue;
                pairs += 1.0;
                num += a.gamma < b.gamma ? 1.0 : (a.gamma == b.gamma ? 0.5 : 0.0);
            }
        }
        mismatches += auroc(s) != num / pairs;
        ++cases;
    }
    report(3, mismatches == 0, "rank AUROC == pair counting", std::to_string(cases) + " cases, " +
                                                                  std::to_string(mismatches) + " mismatches");
}

// ---- 4
std::set<std::int64_t> chosen(const SelectionResult& s) {
    std::set<std::int64_t> out;
    for (const auto& l : s.per_language) {
        for (const auto& it : l) out.insert(it.stable_id);
    }
    return out;
}

void selection_properties() {
    Rng r(4242);
    int quota_viol = 0, nondet = 0, transform = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int classes = 2 + static_cast<int>(r.below(4));
        const double k = 1.0 + static_cast<double>(r.below(50));
        std::vector<std::vector<ScoredItem>> pool(1 + r.below(3));
        std::int64_t id = 0;
        for (auto& lang : pool) {
            const int n = static_cast<int>(r.below(80));
            for (int i = 0; i < n; ++i) {
                lang.push_back({id++, static_cast<int>(r.below(static_cast<std::uint64_t>(classes))),
                                static_cast<double>(r.below(10)) / 3.0});
            }
        }
        auto a = select_classification(pool, classes, SelectionConfig{k});
        auto b = select_classification(pool, classes, SelectionConfig{k});
        auto warped = pool;
        for (auto& lang : warped) {
            for (auto& it : lang) it.gamma = std::exp(it.gamma) * 2.0 + 5.0;
        }
        auto c = select_classification(warped, classes, SelectionConfig{k});
        for (std::size_t l = 0; l < pool.size(); ++l) {
            std::map<int, int> per;
            for (const auto& it : a.per_language[l]) ++per[it.silver[0]];
            for (auto [cls, n] : per) quota_viol += n > selection_quota(k, pool[l].size());
        }
        nondet += chosen(a) != chosen(b);
        transform += chosen(a) != chosen(c);
    }

    // tagging rule: no sequence with an entity beyond its type threshold
    auto labels = LabelSet::tagging({"PER", "LOC", "ORG"});
    int tag_viol = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<std::vector<ScoredSequence>> s(1);
        const int n = static_cast<int>(r.below(30));
        for (int i = 0; i < n; ++i) {
            ScoredSequence q;
            q.stable_id = i;
            const int len = 1 + static_cast<int>(r.below(6));
            for (int t = 0; t < len; ++t) {
                q.tags.push_back(static_cast<int>(r.below(7)));
                q.token_gamma.push_back(r.uniform());
            }
            s[0].push_back(q);
        }
        const double k = 5.0 + static_cast<double>(r.below(60));
        auto sel = select_tagging(labels, s, SelectionConfig{k});
        std::map<int, double> threshold;
        for (const auto& qr : sel.quotas) threshold[qr.label] = qr.quota > 0 ? qr.threshold_gamma : -INFINITY;
        for (const auto& it : sel.per_language[0]) {
            auto ents = score_entities(labels, s[0][static_cast<std::size_t>(it.stable_id)]);
            if (ents.empty()) ++tag_viol;
            for (const auto& e : ents) tag_viol += e.gamma > threshold[e.span.type];
        }
    }
    report(4, quota_viol + nondet + transform + tag_viol == 0, "selection properties",
           "1000 pools: quota violations " + std::to_string(quota_viol) + ", nondeterministic " +
               std::to_string(nondet) + ", transform-sensitive " + std::to_string(transform) +
               "; tagging violations " + std::to_string(tag_viol));
}

// ---- 5-7
struct ModeStats {
    std::vector<double> target_mean;   // per seed
    std::vector<double> auroc;         // per seed, mean over targets (final iteration)
    std::vector<double> silver_iter2;  // per seed, mean over targets
};

ModeStats run_mode(const ExperimentConfig& cfg, const std::string& mode) {
    ModeStats st;
    for (int s = 1; s <= kSeeds; ++s) {
        const auto seed = static_cast<std::uint64_t>(s);
        Pool pool = load_data(cfg, seed);
        RunResult res = run(pool, parse_mode(mode, cfg, pool), engine_config(cfg, seed));
        st.target_mean.push_back(res.mean_target_metric(res.pool));
        double au = 0.0, sp = 0.0;
        int nau = 0, nsp = 0;
        for (const auto& r : res.reports) {
            if (r.is_source) continue;
            if (r.iteration == res.iterations && r.auroc) {
                au += *r.auroc;
                ++nau;
            }
            if (r.iteration == 2 && r.silver_precision) {
                sp += *r.silver_precision;
                ++nsp;
            }
        }
        st.auroc.push_back(nau ? au / nau : NAN);
        st.silver_iter2.push_back(nsp ? sp / nsp : NAN);
    }
    return st;
}

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

ModeStats xnli_joint, xnli_sl;

void xnli() {
    auto t0 = Clock::now();
    auto cfg = parse_config(R"({"data": {"preset": "desk-xnli"}})");
    auto direct = run_mode(cfg, "direct");
    auto joint = run_mode(cfg, "joint");
    auto sl = run_mode(cfg, "sl-leu");
    const double secs = seconds_since(t0);
    const double d = 100.0 * mean(direct.target_mean), j = 100.0 * mean(joint.target_mean),
                 s = 100.0 * mean(sl.target_mean);
    report(5, s >= j + 2.0 && j >= d - 0.5 && secs < 300.0, "desk-XNLI accuracy",
           "Direct " + fmt("%.2f", d) + ", Joint " + fmt("%.2f", j) + ", SL-LEU " + fmt("%.2f", s) + " (SL-Joint " +
               fmt("%+.2f", s - j) + ", Joint-Direct " + fmt("%+.2f", j - d) + "), " + fmt("%.1f s", secs));

    xnli_joint = joint;
    xnli_sl = sl;
}

// reuses the desk-XNLI runs of criterion 5
void uncertainty_quality() {
    if (xnli_sl.auroc.empty()) throw std::runtime_error("desk-XNLI runs did not complete");
    const double au = mean(xnli_sl.auroc);
    const double p_leu = 100.0 * mean(xnli_sl.silver_iter2), p_all = 100.0 * mean(xnli_joint.silver_iter2);
    report(7, au > 0.6 && p_leu >= p_all + 3.0, "LEU uncertainty quality",
           "target AUROC " + fmt("%.3f", au) + ", silver precision at iteration 2: LEU " + fmt("%.2f", p_leu) +
               " vs select-all " + fmt("%.2f", p_all));
}

void ner() {
    auto t0 = Clock::now();
    auto cfg = parse_config(R"({"data": {"preset": "desk-ner"}})");
    auto joint = run_mode(cfg, "joint");
    auto sl = run_mode(cfg, "sl-leu");
    const double secs = seconds_since(t0);
    const double j = 100.0 * mean(joint.target_mean), s = 100.0 * mean(sl.target_mean);
    report(6, s >= j + 2.0 && secs < 600.0, "desk-NER span F1",
           "Joint " + fmt("%.2f", j) + ", SL-LEU " + fmt("%.2f", s) + " (" + fmt("%+.2f", s - j) + "), " +
               fmt("%.1f s", secs));
}

// ---- 8
std::string slurp(const fs::path& p) {
    std::ifstream is(p);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void determinism() {
    const auto dir = fs::temp_directory_path() / "selflearn_acceptance_det";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto cfg = dir / "config.json";
    std::ofstream(cfg) << R"({"data": {"preset": "desk-ner"}, "mode": "sl", "estimator": {"kind": "leu"}, "seed": 3})";
    CommandOptions o;
    o.configs = {cfg};
    o.out = dir / "a";
    cmd_run(o);
    o.out = dir / "b";
    cmd_run(o);
    bool same = true;
    std::string differing;
    for (const char* f : {"reports.jsonl", "metrics.json", "model.json"}) {
        if (slurp(dir / "a" / f) != slurp(dir / "b" / f)) {
            same = false;
            differing += std::string(f) + " ";
        }
    }
    const bool nonempty = !slurp(dir / "a" / "reports.jsonl").empty();
    report(8, same && nonempty, "same config and seed give identical reports",
           same ? "reports.jsonl, metrics.json and model.json byte-identical" : "differs: " + differing);
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<void()>>> steps{
        {"1", gradients}, {"2", identities}, {"3", auroc_exact}, {"4", selection_properties},
        {"5", xnli}, {"6", ner}, {"7", uncertainty_quality}, {"8", determinism}};
    for (const auto& [name, fn] : steps) {
        try {
            fn();
        } catch (const std::exception& e) {
            std::printf("FAIL %s error: %s\n", name.c_str(), e.what());
            ++failures;
        }
    }
    std::printf("%s: %d criterion failure(s)\n", failures ? "FAILED" : "OK", failures);
    return failures ? 1 : 0;
}
