#include "selflearn/dataset_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace selflearn {

namespace {

constexpr Split kSplitOrder[] = {Split::Train, Split::Unlabeled, Split::Dev, Split::Test};

std::vector<std::string> split_on(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = s.find(sep, start);
        out.push_back(s.substr(start, pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

void write_features(std::ostream& os, const Vec& f) {
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (i) os << ',';
        os << format_real(f[i]);
    }
}

const std::vector<int>& labels_to_write(const Example& ex, bool reveal) {
    if (ex.has_visible_labels() || !reveal) return ex.labels;
    return evaluation_gold(ex);
}

struct Line {
    std::string language;
    std::string label;
    Vec features;
};

Line parse_line(const std::string& raw, long line_no) {
    auto cols = split_on(raw, '\t');
    if (cols.size() != 3) {
        throw std::invalid_argument("line " + std::to_string(line_no) + ": expected 3 tab-separated fields");
    }
    Line l{cols[0], cols[1], {}};
    try {
        for (const auto& v : split_on(cols[2], ',')) l.features.push_back(parse_real(v));
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument("line " + std::to_string(line_no) + ": " + e.what());
    }
    return l;
}

void file_example(Pool& pool, Split split, Example ex, std::vector<int> labels) {
    if (split == Split::Unlabeled) {
        set_hidden_gold(ex, std::move(labels));
        ex.provenance = {Provenance::Kind::Unlabeled, 0};
    } else {
        if (labels.empty()) {
            throw std::invalid_argument("example in split '" + std::string(split_name(split)) +
                                        "' has no label");
        }
        set_hidden_gold(ex, labels);
        ex.labels = std::move(labels);
        ex.provenance = {Provenance::Kind::Gold, 0};
    }
    pool.data.at(static_cast<std::size_t>(ex.language)).part(split).push_back(std::move(ex));
}

}  // namespace

std::string format_real(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_real(const std::string& text) {
    double v = 0.0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw std::invalid_argument("malformed number '" + text + "'");
    }
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite feature value");
    return v;
}

void write_split(std::ostream& os, const Pool& pool, Split split, bool reveal_hidden_gold) {
    const bool tagging = pool.labels.task() == Task::Tagging;
    for (const auto& lang : pool.data) {
        for (const auto& ex : lang.part(split)) {
            const auto& name = pool.languages.at(static_cast<std::size_t>(ex.language)).name;
            const auto& labels = labels_to_write(ex, reveal_hidden_gold);
            for (std::size_t t = 0; t < ex.tokens.size(); ++t) {
                os << name << '\t' << (labels.empty() ? std::string("?") : pool.labels.name_of(labels[t]))
                   << '\t';
                write_features(os, ex.tokens[t]);
                os << '\n';
            }
            if (tagging) os << '\n';
        }
    }
}

void read_split(std::istream& is, Pool& pool, Split split, std::int64_t& next_id) {
    const bool tagging = pool.labels.task() == Task::Tagging;
    std::string raw;
    long line_no = 0;
    Example current;
    std::vector<int> labels;
    bool any_unknown = false;
    bool any_known = false;

    auto flush = [&]() {
        if (current.tokens.empty()) return;
        if (any_unknown && any_known) {
            throw std::invalid_argument("line " + std::to_string(line_no) +
                                        ": sequence mixes '?' and labelled tokens");
        }
        current.stable_id = next_id++;
        file_example(pool, split, std::move(current), any_unknown ? std::vector<int>{} : std::move(labels));
        current = Example{};
        labels.clear();
        any_unknown = any_known = false;
    };

    while (std::getline(is, raw)) {
        ++line_no;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        if (raw.empty()) {
            if (tagging) flush();
            continue;
        }
        Line l = parse_line(raw, line_no);
        int lang = 0;
        try {
            lang = pool.language_id(l.language);
        } catch (const std::invalid_argument&) {
            throw std::invalid_argument("line " + std::to_string(line_no) + ": unknown language '" +
                                        l.language + "'");
        }
        if (!current.tokens.empty() && current.language != lang) {
            throw std::invalid_argument("line " + std::to_string(line_no) +
                                        ": language changes inside a sequence");
        }
        current.language = lang;
        current.tokens.push_back(std::move(l.features));
        if (l.label == "?") {
            any_unknown = true;
        } else {
            any_known = true;
            try {
                labels.push_back(pool.labels.id_of(l.label));
            } catch (const std::invalid_argument&) {
                throw std::invalid_argument("line " + std::to_string(line_no) + ": unknown label '" +
                                            l.label + "'");
            }
        }
        if (!tagging) flush();
    }
    flush();
}

std::string split_file_name(Task task, Split split) {
    return std::string(split_name(split)) + (task == Task::Tagging ? ".conll" : ".tsv");
}

void write_dataset(const std::filesystem::path& dir, const Pool& pool) {
    std::filesystem::create_directories(dir);
    nlohmann::ordered_json m;
    m["task"] = pool.labels.task() == Task::Tagging ? "tagging" : "classification";
    if (pool.labels.task() == Task::Tagging) {
        m["entity_types"] = pool.labels.entity_types();
    } else {
        m["classes"] = pool.labels.names();
    }
    std::vector<std::string> names;
    for (const auto& l : pool.languages) names.push_back(l.name);
    m["languages"] = names;
    m["source"] = pool.languages.at(static_cast<std::size_t>(pool.source)).name;
    std::ofstream(dir / "dataset.json") << m.dump(2) << "\n";
    for (Split s : kSplitOrder) {
        std::ofstream os(dir / split_file_name(pool.labels.task(), s));
        if (!os) throw std::runtime_error("cannot write " + (dir / split_file_name(pool.labels.task(), s)).string());
        write_split(os, pool, s, s == Split::Unlabeled);
    }
}

Pool read_dataset(const std::filesystem::path& dir) {
    std::ifstream mf(dir / "dataset.json");
    if (!mf) throw std::runtime_error("cannot open " + (dir / "dataset.json").string());
    nlohmann::json m = nlohmann::json::parse(mf);
    Pool pool;
    const std::string task = m.at("task").get<std::string>();
    if (task == "tagging") {
        pool.labels = LabelSet::tagging(m.at("entity_types").get<std::vector<std::string>>());
    } else if (task == "classification") {
        pool.labels = LabelSet::classification(m.at("classes").get<std::vector<std::string>>());
    } else {
        throw std::invalid_argument("dataset.json: unknown task '" + task + "'");
    }
    auto names = m.at("languages").get<std::vector<std::string>>();
    for (std::size_t i = 0; i < names.size(); ++i) pool.languages.push_back({static_cast<int>(i), names[i]});
    pool.data.resize(names.size());
    pool.source = pool.language_id(m.at("source").get<std::string>());
    std::int64_t next_id = 0;
    for (Split s : kSplitOrder) {
        auto path = dir / split_file_name(pool.labels.task(), s);
        std::ifstream is(path);
        if (!is) throw std::runtime_error("cannot open " + path.string());
        try {
            read_split(is, pool, s, next_id);
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(path.string() + ": " + e.what());
        }
    }
    pool.validate();
    return pool;
}

void assign_canonical_ids(Pool& pool) {
    std::int64_t next = 0;
    for (Split s : kSplitOrder) {
        for (auto& lang : pool.data) {
            for (auto& ex : lang.part(s)) ex.stable_id = next++;
        }
    }
}

}  // namespace selflearn
