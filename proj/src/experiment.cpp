#include "selflearn/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "selflearn/dataset_io.hpp"
#include "selflearn/evaluation.hpp"

namespace selflearn {

using nlohmann::json;
using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

// Strict view of one JSON object: every key read is recorded, and finish()
// rejects whatever is left.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    }

    std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key);
    }

    bool get(const std::string& key, int& out) {
        if (!has(key)) return false;
        const json& v = j_.at(key);
        if (!v.is_number_integer()) throw ConfigError(at(key), "expected an integer");
        out = v.get<int>();
        return true;
    }

    bool get(const std::string& key, std::uint64_t& out) {
        if (!has(key)) return false;
        const json& v = j_.at(key);
        if (!v.is_number_unsigned()) throw ConfigError(at(key), "expected a non-negative integer");
        out = v.get<std::uint64_t>();
        return true;
    }

    bool get(const std::string& key, double& out) {
        if (!has(key)) return false;
        const json& v = j_.at(key);
        if (!v.is_number()) throw ConfigError(at(key), "expected a number");
        out = v.get<double>();
        return true;
    }

    bool get(const std::string& key, std::string& out) {
        if (!has(key)) return false;
        const json& v = j_.at(key);
        if (!v.is_string()) throw ConfigError(at(key), "expected a string");
        out = v.get<std::string>();
        return true;
    }

    bool get(const std::string& key, std::vector<double>& out) {
        if (!has(key)) return false;
        const json& v = j_.at(key);
        if (!v.is_array()) throw ConfigError(at(key), "expected a list of numbers");
        out.clear();
        for (const auto& x : v) {
            if (!x.is_number()) throw ConfigError(at(key), "expected a list of numbers");
            out.push_back(x.get<double>());
        }
        return true;
    }

    bool get(const std::string& key, std::vector<std::string>& out) {
        if (!has(key)) return false;
        const json& v = j_.at(key);
        if (!v.is_array()) throw ConfigError(at(key), "expected a list of strings");
        out.clear();
        for (const auto& x : v) {
            if (!x.is_string()) throw ConfigError(at(key), "expected a list of strings");
            out.push_back(x.get<std::string>());
        }
        return true;
    }

    Section sub(const std::string& key) {
        seen_.insert(key);
        return Section(j_.at(key), at(key));
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) throw ConfigError(at(it.key()), "unknown key");
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

template <class F>
void checked(const std::string& field, F&& f) {
    try {
        f();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(field, e.what());
    }
}

void read_sizes(Section s, SplitSizes& sz) {
    s.get("train", sz.train);
    s.get("unlabeled", sz.unlabeled);
    s.get("dev", sz.dev);
    s.get("test", sz.test);
    s.finish();
}

void read_synth(Section s, DataConfig& d) {
    int num_classes = d.synth.num_classes;
    s.get("dim", d.synth.dim);
    s.get("separation", d.synth.separation);
    s.get("noise", d.synth.noise);
    if (s.get("num_classes", num_classes)) d.synth.num_classes = num_classes;
    s.get("entity_types", d.synth.entity_types);
    if (s.has("source_sizes")) read_sizes(s.sub("source_sizes"), d.synth.source_sizes);
    if (s.has("target_sizes")) read_sizes(s.sub("target_sizes"), d.synth.target_sizes);
    s.get("rotations", d.rotations);
    s.get("offset", d.offset);
    s.get("min_length", d.synth.min_length);
    s.get("max_length", d.synth.max_length);
    s.get("min_entities", d.synth.min_entities);
    s.get("max_entities", d.synth.max_entities);
    s.get("max_entity_length", d.synth.max_entity_length);
    s.finish();
}

void read_data(Section s, DataConfig& d) {
    std::string dir;
    const bool has_dir = s.get("dir", dir);
    const bool has_preset = s.get("preset", d.preset);
    if (has_dir && (has_preset || s.has("synth"))) {
        throw ConfigError(s.at("dir"), "a dataset directory excludes preset/synth settings");
    }
    if (has_dir) {
        if (dir.empty()) throw ConfigError(s.at("dir"), "empty path");
        d.dir = dir;
    }
    if (d.preset == "desk-xnli") {
        d.synth = desk_classification_config(1);
    } else if (d.preset == "desk-ner") {
        d.synth = desk_tagging_config(1);
    } else {
        throw ConfigError(s.at("preset"), "unknown preset '" + d.preset + "' (desk-xnli, desk-ner)");
    }
    d.rotations = {15.0, 30.0, 45.0, 60.0};
    if (s.has("synth")) read_synth(s.sub("synth"), d);
    s.finish();
    if (!d.dir) {
        checked(s.at("synth"), [&] { d.synth.validate(); });
        for (double r : d.rotations) {
            if (!std::isfinite(r)) throw ConfigError(s.at("synth.rotations"), "non-finite rotation");
        }
        if (!std::isfinite(d.offset)) throw ConfigError(s.at("synth.offset"), "non-finite offset");
    }
}

std::string read_text(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + p.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    os << text;
    if (!os) throw std::runtime_error("write failed: " + p.string());
}

ojson opt_json(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

std::string pad_iteration(int it) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%02d", it);
    return buf;
}

struct Loaded {
    std::string text;
    ExperimentConfig cfg;
    fs::path path;
};

Loaded load(const fs::path& p) {
    Loaded l;
    l.path = p;
    l.text = read_text(p);
    l.cfg = parse_config(l.text);
    return l;
}

fs::path output_dir(const CommandOptions& opts, const ExperimentConfig& cfg) {
    if (opts.out) return *opts.out;
    if (!cfg.output.empty()) return cfg.output;
    throw ConfigError("output", "no output directory (set \"output\" or pass --out)");
}

std::uint64_t eval_seed(std::uint64_t seed) { return mix64(seed ^ 0x6576616c2d736565ULL); }

// Final-model predictions on every test split.
std::vector<SplitEvaluation> evaluate_tests(const Model& model, const Pool& pool, const EstimatorConfig& est,
                                            std::uint64_t seed) {
    std::vector<SplitEvaluation> out;
    for (const auto& lang : pool.languages) {
        out.push_back(evaluate_split(model, pool, lang.id, Split::Test, est, eval_seed(seed)));
    }
    return out;
}

void write_gamma_dump(const fs::path& p, const Pool& pool, const std::vector<SplitEvaluation>& evals) {
    std::ostringstream os;
    os << "stable_id,token,language,predicted,gold,gamma,vacuity,dissonance,correct\n";
    for (std::size_t l = 0; l < evals.size(); ++l) {
        const auto& ev = evals[l];
        for (std::size_t i = 0; i < ev.stable_ids.size(); ++i) {
            const auto& s = ev.scores[i];
            os << ev.stable_ids[i] << ',' << ev.tokens[i] << ',' << pool.languages[l].name << ','
               << pool.labels.name_of(ev.predicted[i]) << ','
               << (ev.gold[i] >= 0 ? pool.labels.name_of(ev.gold[i]) : std::string("?")) << ','
               << format_real(s.gamma) << ',' << (s.vacuity ? format_real(*s.vacuity) : "") << ','
               << (s.dissonance ? format_real(*s.dissonance) : "") << ','
               << (ev.gold[i] < 0 ? "" : (ev.gold[i] == ev.predicted[i] ? "1" : "0")) << '\n';
        }
    }
    write_text(p, os.str());
}

void write_histograms(const fs::path& p, const Pool& pool, const std::vector<SplitEvaluation>& evals, int bins) {
    std::vector<std::string> names;
    std::vector<std::vector<double>> scores;
    for (std::size_t l = 0; l < evals.size(); ++l) {
        if (evals[l].scores.empty()) continue;
        names.push_back(pool.languages[l].name);
        std::vector<double> g;
        for (const auto& s : evals[l].scores) g.push_back(s.gamma);
        scores.push_back(std::move(g));
    }
    std::ostringstream os;
    write_histogram_csv(os, gamma_histogram(names, scores, bins));
    write_text(p, os.str());
}

std::optional<double> mean_target_auroc(const Pool& pool, const std::vector<SplitEvaluation>& evals) {
    double sum = 0.0;
    int n = 0;
    for (int l : pool.targets()) {
        if (evals[static_cast<std::size_t>(l)].auroc) {
            sum += *evals[static_cast<std::size_t>(l)].auroc;
            ++n;
        }
    }
    if (n == 0) return std::nullopt;
    return sum / n;
}

struct SeedOutcome {
    std::uint64_t seed = 0;
    std::vector<std::string> languages;
    std::vector<double> test;
    double target_mean = 0.0;
    std::optional<double> target_auroc;
};

SeedOutcome run_one(const ExperimentConfig& cfg, const std::string& text, std::uint64_t seed, const fs::path& dir) {
    fs::create_directories(dir);
    Pool pool = load_data(cfg, seed);
    const RunMode mode = parse_mode(cfg.mode, cfg, pool);
    RunResult res;
    try {
        res = run(pool, mode, engine_config(cfg, seed));
    } catch (const RunAborted& e) {
        write_abort_dump(dir / "abort", e);
        throw;
    }

    std::ostringstream reports;
    for (const auto& r : res.reports) reports << report_to_json(r) << '\n';
    write_text(dir / "reports.jsonl", reports.str());
    for (std::size_t i = 0; i < res.selections.size(); ++i) {
        std::ostringstream os;
        write_selection_audit(os, res.pool, res.selections[i]);
        write_text(dir / ("selection_iter" + pad_iteration(static_cast<int>(i) + 2) + ".csv"), os.str());
    }
    write_text(dir / "model.json", save_model_json(res.model, config_hash(text)) + "\n");

    const EstimatorConfig est = mode.scoring_estimator();
    auto evals = evaluate_tests(res.model, res.pool, est, seed);
    write_gamma_dump(dir / "uncertainty.csv", res.pool, evals);
    write_histograms(dir / "histogram.csv", res.pool, evals, cfg.histogram_bins);
    {
        std::ostringstream os;
        write_hidden_csv(os, res.pool, export_hidden(res.model, res.pool, Split::Test),
                         res.model.shape().feature_width());
        write_text(dir / "hidden_test.csv", os.str());
    }

    SeedOutcome out;
    out.seed = seed;
    ojson m;
    m["mode"] = mode.label();
    m["seed"] = seed;
    m["stop_reason"] = res.stop_reason;
    m["iterations"] = res.iterations;
    m["metric"] = pool.labels.task() == Task::Tagging ? "span_f1" : "accuracy";
    ojson langs = ojson::array();
    for (const auto& r : res.reports) {
        if (r.iteration != res.iterations) continue;
        langs.push_back({{"language", r.language_name},
                         {"is_source", r.is_source},
                         {"test", r.test_metric},
                         {"auroc", opt_json(evals[static_cast<std::size_t>(r.language)].auroc)}});
        out.languages.push_back(r.language_name);
        out.test.push_back(r.test_metric);
    }
    m["languages"] = langs;
    out.target_mean = res.mean_target_metric(res.pool);
    out.target_auroc = mean_target_auroc(res.pool, evals);
    m["target_mean"] = out.target_mean;
    m["target_auroc_mean"] = opt_json(out.target_auroc);
    write_text(dir / "metrics.json", m.dump(2) + "\n");
    return out;
}

ojson mean_std(const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    const double sd = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
    return {{"mean", mean}, {"std", sd}, {"values", v}};
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (c != ' ') {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::string fixed2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("<root>", std::string("malformed JSON: ") + e.what());
    }
    ExperimentConfig cfg;
    Section s(root, "");
    if (s.has("data")) {
        read_data(s.sub("data"), cfg.data);
    } else {
        cfg.data.synth = desk_classification_config(1);
        cfg.data.rotations = {15.0, 30.0, 45.0, 60.0};
    }
    s.get("mode", cfg.mode);
    if (cfg.mode != "direct" && cfg.mode != "single" && cfg.mode != "joint" && cfg.mode != "sl" &&
        cfg.mode.rfind("sl-", 0) != 0) {
        throw ConfigError("mode", "unknown mode '" + cfg.mode + "' (direct, single, joint, sl)");
    }
    s.get("single_target", cfg.single_target);
    if (cfg.mode == "single" && cfg.single_target.empty()) {
        throw ConfigError("single_target", "required in single mode");
    }
    if (s.has("estimator")) {
        Section e = s.sub("estimator");
        std::string kind;
        if (e.get("kind", kind)) checked(e.at("kind"), [&] { cfg.estimator.kind = estimator_from_string(kind); });
        e.get("mc_samples", cfg.estimator.mc_samples);
        cfg.evi_alpha_set = e.get("evi_alpha", cfg.estimator.evi_alpha);
        e.finish();
        checked("estimator", [&] { cfg.estimator.validate(); });
    } else {
        cfg.estimator.kind = EstimatorKind::LEU;
    }
    if (s.has("selection")) {
        Section e = s.sub("selection");
        e.get("top_k_percent", cfg.selection.top_k_percent);
        e.finish();
        checked("selection.top_k_percent", [&] { cfg.selection.validate(); });
    }
    if (s.has("train")) {
        Section e = s.sub("train");
        e.get("learning_rate", cfg.train.learning_rate);
        e.get("batch_size", cfg.train.batch_size);
        e.get("epochs_first", cfg.train.epochs_first);
        e.get("epochs_later", cfg.train.epochs_later);
        e.get("max_grad_norm", cfg.train.max_grad_norm);
        e.finish();
        checked("train", [&] { cfg.train.validate(); });
    }
    if (s.has("model")) {
        Section e = s.sub("model");
        e.get("hidden", cfg.model.hidden);
        std::string act;
        if (e.get("activation", act)) checked(e.at("activation"), [&] { cfg.model.activation = activation_from_string(act); });
        e.get("logvar_init", cfg.model.logvar_init);
        e.finish();
        if (cfg.model.hidden < 0) throw ConfigError("model.hidden", "must be >= 0");
        if (!std::isfinite(cfg.model.logvar_init)) throw ConfigError("model.logvar_init", "must be finite");
    }
    if (s.has("loop")) {
        Section e = s.sub("loop");
        e.get("patience", cfg.loop.patience);
        e.get("max_iterations", cfg.loop.max_iterations);
        e.finish();
        if (cfg.loop.patience < 1) throw ConfigError("loop.patience", "must be >= 1");
        if (cfg.loop.max_iterations < 1) throw ConfigError("loop.max_iterations", "must be >= 1");
    }
    s.get("seed", cfg.seed);
    s.get("repeats", cfg.repeats);
    if (cfg.repeats < 1) throw ConfigError("repeats", "must be >= 1");
    if (s.has("eval")) {
        Section e = s.sub("eval");
        e.get("histogram_bins", cfg.histogram_bins);
        e.finish();
        if (cfg.histogram_bins < 1) throw ConfigError("eval.histogram_bins", "must be >= 1");
    }
    s.get("output", cfg.output);
    s.finish();
    return cfg;
}

std::string config_hash(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

Pool load_data(const ExperimentConfig& cfg, std::uint64_t seed) {
    if (cfg.data.dir) return read_dataset(*cfg.data.dir);
    SynthConfig sc = cfg.data.synth;
    sc.seed = seed;
    return generate(sc, default_shifts(sc, cfg.data.rotations, cfg.data.offset));
}

EstimatorConfig effective_estimator(const ExperimentConfig& cfg, Task task) {
    EstimatorConfig e = cfg.estimator;
    if (!cfg.evi_alpha_set) e.evi_alpha = task == Task::Tagging ? 0.01 : 1.0;
    return e;
}

EngineConfig engine_config(const ExperimentConfig& cfg, std::uint64_t seed) {
    EngineConfig ec;
    ec.train = cfg.train;
    ec.train.seed = seed;
    ec.selection = cfg.selection;
    ec.model = cfg.model;
    ec.loop = cfg.loop;
    ec.seed = seed;
    return ec;
}

RunMode parse_mode(const std::string& name, const ExperimentConfig& cfg, const Pool& pool) {
    if (name == "direct") return RunMode::direct();
    if (name == "joint") return RunMode::joint();
    if (name == "single") {
        int target = -1;
        try {
            target = pool.language_id(cfg.single_target);
        } catch (const std::invalid_argument&) {
            throw ConfigError("single_target", "unknown language '" + cfg.single_target + "'");
        }
        if (target == pool.source) throw ConfigError("single_target", "must not be the source language");
        return RunMode::single(target);
    }
    EstimatorConfig est = effective_estimator(cfg, pool.labels.task());
    if (name == "sl") return RunMode::with_uncertainty(est);
    if (name.rfind("sl-", 0) == 0) {
        checked("mode", [&] { est.kind = estimator_from_string(name.substr(3)); });
        return RunMode::with_uncertainty(est);
    }
    throw ConfigError("mode", "unknown mode '" + name + "'");
}

int cmd_synth(const CommandOptions& opts) {
    if (opts.configs.size() != 1) throw ConfigError("--config", "synth takes exactly one config");
    Loaded l = load(opts.configs.front());
    if (l.cfg.data.dir) throw ConfigError("data.dir", "synth needs a synthetic preset, not a directory");
    const fs::path out = output_dir(opts, l.cfg);
    const std::uint64_t seed = opts.seed.value_or(l.cfg.seed);
    write_dataset(out, load_data(l.cfg, seed));
    write_text(out / "config.json", l.text);
    return 0;
}

int cmd_run(const CommandOptions& opts) {
    if (opts.configs.size() != 1) throw ConfigError("--config", "run takes exactly one config");
    Loaded l = load(opts.configs.front());
    const fs::path out = output_dir(opts, l.cfg);
    const std::uint64_t seed = opts.seed.value_or(l.cfg.seed);
    fs::create_directories(out);
    write_text(out / "config.json", l.text);

    std::vector<SeedOutcome> outcomes;
    for (int r = 0; r < l.cfg.repeats; ++r) {
        const std::uint64_t s = seed + static_cast<std::uint64_t>(r);
        const fs::path dir = l.cfg.repeats == 1 ? out : out / ("seed_" + std::to_string(s));
        outcomes.push_back(run_one(l.cfg, l.text, s, dir));
    }
    if (l.cfg.repeats > 1) {
        ojson sum;
        std::vector<std::uint64_t> seeds;
        std::vector<double> means, aurocs;
        for (const auto& o : outcomes) {
            seeds.push_back(o.seed);
            means.push_back(o.target_mean);
            if (o.target_auroc) aurocs.push_back(*o.target_auroc);
        }
        sum["seeds"] = seeds;
        sum["target_mean"] = mean_std(means);
        sum["target_auroc_mean"] = aurocs.size() == outcomes.size() ? mean_std(aurocs) : ojson(nullptr);
        ojson langs;
        for (std::size_t i = 0; i < outcomes.front().languages.size(); ++i) {
            std::vector<double> v;
            for (const auto& o : outcomes) v.push_back(o.test[i]);
            langs[outcomes.front().languages[i]] = mean_std(v);
        }
        sum["languages"] = langs;
        write_text(out / "summary.json", sum.dump(2) + "\n");
    }
    return 0;
}

int cmd_eval_uncertainty(const CommandOptions& opts) {
    if (opts.configs.size() != 1) throw ConfigError("--config", "eval-uncertainty takes exactly one config");
    if (!opts.checkpoint) throw ConfigError("--checkpoint", "required");
    Loaded l = load(opts.configs.front());
    const fs::path out = output_dir(opts, l.cfg);
    const std::uint64_t seed = opts.seed.value_or(l.cfg.seed);
    std::string ckpt_hash;
    Model model = load_model_json(read_text(*opts.checkpoint), &ckpt_hash);
    Pool pool = load_data(l.cfg, seed);
    const auto& shape = model.shape();
    const int dim = static_cast<int>(pool.data[static_cast<std::size_t>(pool.source)].train.front().tokens.front().size());
    if (shape.input_dim != dim || shape.classes != pool.labels.size() || shape.languages != pool.num_languages()) {
        throw ConsistencyError("checkpoint shape does not match the dataset");
    }
    const EstimatorConfig est = effective_estimator(l.cfg, pool.labels.task());
    auto evals = evaluate_tests(model, pool, est, seed);

    fs::create_directories(out);
    write_text(out / "config.json", l.text);
    ojson rep;
    rep["estimator"] = to_string(est.kind);
    rep["checkpoint_config_hash"] = ckpt_hash;
    rep["seed"] = seed;
    ojson langs = ojson::array();
    for (std::size_t i = 0; i < evals.size(); ++i) {
        langs.push_back({{"language", pool.languages[i].name},
                         {"is_source", static_cast<int>(i) == pool.source},
                         {"auroc", opt_json(evals[i].auroc)},
                         {"test", evals[i].metric},
                         {"tokens", evals[i].stable_ids.size()}});
    }
    rep["languages"] = langs;
    rep["target_auroc_mean"] = opt_json(mean_target_auroc(pool, evals));
    write_text(out / "auroc.json", rep.dump(2) + "\n");
    write_gamma_dump(out / "gamma_dump.csv", pool, evals);
    write_histograms(out / "histogram.csv", pool, evals, l.cfg.histogram_bins);
    return 0;
}

int cmd_compare(const CommandOptions& opts) {
    if (opts.configs.empty()) throw ConfigError("--config", "compare needs at least one config");
    std::vector<Loaded> configs;
    for (const auto& p : opts.configs) configs.push_back(load(p));
    const fs::path out = output_dir(opts, configs.front().cfg);
    fs::create_directories(out);

    struct Row {
        std::string config, mode;
        std::vector<double> metrics;  // per language, mean over seeds
        double target_avg = 0.0;
    };
    std::vector<Row> rows;
    std::vector<std::string> header_langs;

    for (std::size_t ci = 0; ci < configs.size(); ++ci) {
        const auto& l = configs[ci];
        write_text(out / ("config_" + std::to_string(ci) + ".json"), l.text);
        auto modes = opts.modes.empty() ? std::vector<std::string>{l.cfg.mode} : split_list(opts.modes);
        const std::uint64_t seed = opts.seed.value_or(l.cfg.seed);
        for (const auto& mode_name : modes) {
            Row row;
            row.config = l.path.stem().string();
            std::vector<double> sums;
            for (int r = 0; r < l.cfg.repeats; ++r) {
                const std::uint64_t s = seed + static_cast<std::uint64_t>(r);
                Pool pool = load_data(l.cfg, s);
                if (header_langs.empty()) {
                    for (const auto& lang : pool.languages) header_langs.push_back(lang.name);
                } else if (header_langs.size() != pool.languages.size()) {
                    throw ConfigError("data", "compared configs have different languages");
                }
                if (sums.empty()) sums.assign(pool.languages.size(), 0.0);
                const EngineConfig ec = engine_config(l.cfg, s);
                if (mode_name == "single") {
                    // one run per target; the source column averages those runs
                    row.mode = "BL-Single";
                    double src = 0.0;
                    for (int t : pool.targets()) {
                        RunResult res = run(pool, RunMode::single(t), ec);
                        auto m = res.final_metrics();
                        sums[static_cast<std::size_t>(t)] += m[static_cast<std::size_t>(t)];
                        src += m[static_cast<std::size_t>(pool.source)];
                    }
                    sums[static_cast<std::size_t>(pool.source)] += src / static_cast<double>(pool.targets().size());
                } else {
                    RunMode mode;
                    try {
                        mode = parse_mode(mode_name, l.cfg, pool);
                    } catch (const ConfigError& e) {
                        throw ConfigError("--modes", e.message());
                    }
                    row.mode = mode.label();
                    RunResult res = run(pool, mode, ec);
                    auto m = res.final_metrics();
                    for (std::size_t i = 0; i < m.size(); ++i) sums[i] += m[i];
                }
            }
            Pool probe = load_data(l.cfg, seed);
            double tsum = 0.0;
            for (std::size_t i = 0; i < sums.size(); ++i) {
                row.metrics.push_back(sums[i] / l.cfg.repeats);
                if (static_cast<int>(i) != probe.source) tsum += row.metrics.back();
            }
            row.target_avg = tsum / static_cast<double>(probe.targets().size());
            rows.push_back(std::move(row));
        }
    }

    std::ostringstream csv, md;
    csv << "config,mode";
    md << "| config | mode |";
    for (const auto& n : header_langs) {
        csv << ',' << n;
        md << ' ' << n << " |";
    }
    csv << ",target_avg\n";
    md << " target avg |\n|---|---|";
    for (std::size_t i = 0; i <= header_langs.size(); ++i) md << "---:|";
    md << '\n';
    ojson js = ojson::array();
    for (const auto& r : rows) {
        csv << r.config << ',' << r.mode;
        md << "| " << r.config << " | " << r.mode << " |";
        ojson per;
        for (std::size_t i = 0; i < r.metrics.size(); ++i) {
            csv << ',' << format_real(r.metrics[i]);
            md << ' ' << fixed2(100.0 * r.metrics[i]) << " |";
            per[header_langs[i]] = r.metrics[i];
        }
        csv << ',' << format_real(r.target_avg) << '\n';
        md << ' ' << fixed2(100.0 * r.target_avg) << " |\n";
        js.push_back({{"config", r.config}, {"mode", r.mode}, {"languages", per}, {"target_avg", r.target_avg}});
    }
    write_text(out / "compare.csv", csv.str());
    write_text(out / "compare.md", md.str());
    write_text(out / "compare.json", js.dump(2) + "\n");
    std::cout << md.str();
    return 0;
}

void write_abort_dump(const fs::path& dir, const RunAborted& err) {
    fs::create_directories(dir);
    const RunResult& r = err.partial();
    std::ostringstream reports;
    for (const auto& rep : r.reports) reports << report_to_json(rep) << '\n';
    write_text(dir / "reports.jsonl", reports.str());
    write_text(dir / "model.json", save_model_json(r.model, "aborted") + "\n");
    ojson st;
    st["error"] = err.what();
    st["iteration"] = r.iterations;
    st["dev_history"] = r.dev_history;
    write_text(dir / "state.json", st.dump(2) + "\n");
}

std::string error_record(const std::string& kind, const std::string& message, const std::string& field) {
    ojson j;
    j["error"] = kind;
    if (!field.empty()) j["field"] = field;
    j["message"] = message;
    return j.dump();
}

}  // namespace selflearn
