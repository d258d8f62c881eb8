#include "selflearn/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <json.hpp>

#include "selflearn/kernels.hpp"

namespace selflearn {

std::string to_string(Activation a) { return a == Activation::Tanh ? "tanh" : "relu"; }

Activation activation_from_string(const std::string& s) {
    if (s == "tanh") return Activation::Tanh;
    if (s == "relu") return Activation::Relu;
    throw std::invalid_argument("unknown activation '" + s + "'");
}

Model::Model(ModelShape shape) : shape_(shape) {
    if (shape.input_dim <= 0 || shape.classes < 2 || shape.languages < 1 || shape.hidden < 0) {
        throw std::invalid_argument("Model: invalid shape");
    }
    const std::size_t d = static_cast<std::size_t>(shape.input_dim);
    const std::size_t h = static_cast<std::size_t>(shape.hidden);
    const std::size_t w = static_cast<std::size_t>(shape.feature_width());
    const std::size_t c = static_cast<std::size_t>(shape.classes);
    std::size_t at = 0;
    off_.enc_w = at;
    at += h * d;
    off_.enc_b = at;
    at += h;
    off_.out_w = at;
    at += c * w;
    off_.out_b = at;
    at += c;
    off_.var_w = at;
    at += c * w;
    off_.var_b = at;
    at += c;
    off_.lou = at;
    at += static_cast<std::size_t>(shape.languages);
    off_.end = at;
    params_.assign(at, 0.0);
}

Model Model::initialized(ModelShape shape, Rng& rng, double logvar_init) {
    Model m(shape);
    const auto& o = m.off_;
    auto& p = m.params_;
    const double enc_scale = 1.0 / std::sqrt(static_cast<double>(shape.input_dim));
    const double out_scale = 1.0 / std::sqrt(static_cast<double>(shape.feature_width()));
    for (std::size_t i = o.enc_w; i < o.enc_b; ++i) p[i] = enc_scale * rng.normal();
    for (std::size_t i = o.out_w; i < o.out_b; ++i) p[i] = out_scale * rng.normal();
    for (std::size_t i = o.var_w; i < o.var_b; ++i) p[i] = 0.1 * out_scale * rng.normal();
    for (std::size_t i = o.var_b; i < o.lou; ++i) p[i] = logvar_init;
    return m;
}

std::span<const double> Model::lou_logsigma() const {
    return std::span<const double>(params_).subspan(off_.lou, off_.end - off_.lou);
}

std::span<double> Model::lou_logsigma() {
    return std::span<double>(params_).subspan(off_.lou, off_.end - off_.lou);
}

double Model::lou_logsigma(int language) const {
    if (language < 0 || language >= shape_.languages) throw std::invalid_argument("language out of range");
    return params_[off_.lou + static_cast<std::size_t>(language)];
}

ForwardResult forward(const Model& model, std::span<const double> x) {
    const auto& s = model.shape();
    if (x.size() != static_cast<std::size_t>(s.input_dim)) {
        throw std::invalid_argument("forward: feature dimension " + std::to_string(x.size()) +
                                    " does not match model input " + std::to_string(s.input_dim));
    }
    const auto& o = model.offsets();
    auto p = model.params();
    ForwardResult r;
    const std::size_t d = x.size();
    if (s.hidden > 0) {
        const std::size_t h = static_cast<std::size_t>(s.hidden);
        r.pre_activation.resize(h);
        r.hidden.resize(h);
        for (std::size_t j = 0; j < h; ++j) {
            double z = p[o.enc_b + j];
            const double* w = &p[o.enc_w + j * d];
            for (std::size_t k = 0; k < d; ++k) z += w[k] * x[k];
            r.pre_activation[j] = z;
            r.hidden[j] = s.activation == Activation::Tanh ? std::tanh(z) : std::max(0.0, z);
        }
    } else {
        r.hidden.assign(x.begin(), x.end());
    }
    const std::size_t w = r.hidden.size();
    const std::size_t c = static_cast<std::size_t>(s.classes);
    r.logits.resize(c);
    r.logvar.resize(c);
    for (std::size_t k = 0; k < c; ++k) {
        double z = p[o.out_b + k];
        double v = p[o.var_b + k];
        const double* wo = &p[o.out_w + k * w];
        const double* wv = &p[o.var_w + k * w];
        for (std::size_t j = 0; j < w; ++j) {
            z += wo[j] * r.hidden[j];
            v += wv[j] * r.hidden[j];
        }
        r.logits[k] = z;
        r.logvar[k] = v;
    }
    // diverged weights surface here first
    if (!all_finite(r.logits) || !all_finite(r.logvar)) throw NumericError("forward: non-finite head output");
    return r;
}

void backward(const Model& model, std::span<const double> x, const ForwardResult& fwd,
              const HeadGradient& head, int language, double scale, std::span<double> grad) {
    const auto& s = model.shape();
    const auto& o = model.offsets();
    auto p = model.params();
    if (grad.size() != model.size()) throw std::invalid_argument("backward: gradient size mismatch");
    const std::size_t w = fwd.hidden.size();
    const std::size_t c = static_cast<std::size_t>(s.classes);
    const bool has_var = !head.d_logvar.empty();

    Vec d_hidden(w, 0.0);
    for (std::size_t k = 0; k < c; ++k) {
        double gz = scale * head.d_logits[k];
        double gv = has_var ? scale * head.d_logvar[k] : 0.0;
        grad[o.out_b + k] += gz;
        grad[o.var_b + k] += gv;
        for (std::size_t j = 0; j < w; ++j) {
            grad[o.out_w + k * w + j] += gz * fwd.hidden[j];
            grad[o.var_w + k * w + j] += gv * fwd.hidden[j];
            d_hidden[j] += gz * p[o.out_w + k * w + j] + gv * p[o.var_w + k * w + j];
        }
    }
    grad[o.lou + static_cast<std::size_t>(language)] += scale * head.d_logsigma;

    if (s.hidden > 0) {
        const std::size_t d = x.size();
        for (std::size_t j = 0; j < w; ++j) {
            double dz = s.activation == Activation::Tanh
                            ? d_hidden[j] * (1.0 - fwd.hidden[j] * fwd.hidden[j])
                            : (fwd.pre_activation[j] > 0.0 ? d_hidden[j] : 0.0);
            grad[o.enc_b + j] += dz;
            for (std::size_t k = 0; k < d; ++k) grad[o.enc_w + j * d + k] += dz * x[k];
        }
    }
}

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning_rate must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (epochs_first < 1 || epochs_later < 1) throw std::invalid_argument("epochs must be >= 1");
    if (!(max_grad_norm > 0.0)) throw std::invalid_argument("max_grad_norm must be > 0");
}

std::vector<TrainItem> flatten_items(const std::vector<const Example*>& examples) {
    std::vector<TrainItem> items;
    for (const Example* ex : examples) {
        if (ex->labels.size() != ex->tokens.size()) {
            throw std::invalid_argument("training example " + std::to_string(ex->stable_id) +
                                        " has no visible labels");
        }
        for (std::size_t t = 0; t < ex->tokens.size(); ++t) {
            items.push_back({&ex->tokens[t], ex->labels[t], ex->language});
        }
    }
    return items;
}

double clip_gradient(std::span<double> grad, double max_norm) {
    double norm = l2_norm(grad);
    if (!(norm > max_norm)) return 1.0;
    double factor = max_norm / norm;
    for (double& g : grad) g *= factor;
    return factor;
}

EpochResult train_epoch(Model& model, std::span<const TrainItem> items, const LossSpec& loss,
                        const TrainConfig& cfg, Rng& rng, EpochSchedule schedule) {
    if (items.empty()) throw std::invalid_argument("train_epoch: no training items");
    const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
    const std::size_t steps = (items.size() + batch - 1) / batch;
    EpochResult result;
    double loss_total = 0.0;
    for (std::size_t b = 0; b < steps; ++b) {
        auto chunk = items.subspan(b * batch, std::min(batch, items.size() - b * batch));
        std::uint64_t key = rng.next_u64();
        BatchGradient bg = batch_gradient(model, chunk, loss, key, Exec::Parallel);
        if (!std::isfinite(bg.loss_sum)) {
            throw NumericError("non-finite " + to_string(loss.kind) + " loss in batch " +
                               std::to_string(b));
        }
        const double inv = 1.0 / static_cast<double>(chunk.size());
        for (double& g : bg.grad) g *= inv;
        clip_gradient(bg.grad, cfg.max_grad_norm);
        double frac = steps > 1 ? static_cast<double>(b) / static_cast<double>(steps - 1) : 0.0;
        double lr = cfg.learning_rate *
                    (schedule.lr_scale_begin + frac * (schedule.lr_scale_end - schedule.lr_scale_begin));
        auto p = model.params();
        for (std::size_t k = 0; k < p.size(); ++k) p[k] -= lr * bg.grad[k];
        loss_total += bg.loss_sum;
    }
    result.mean_loss = loss_total / static_cast<double>(items.size());
    result.steps = static_cast<int>(steps);
    return result;
}

std::vector<HiddenRow> export_hidden(const Model& model, const Pool& pool, Split split) {
    std::vector<HiddenRow> rows;
    for (const auto& lang : pool.data) {
        for (const auto& ex : lang.part(split)) {
            const auto& gold = evaluation_gold(ex);
            for (std::size_t t = 0; t < ex.tokens.size(); ++t) {
                ForwardResult f = forward(model, ex.tokens[t]);
                HiddenRow row;
                row.stable_id = ex.stable_id;
                row.token = static_cast<int>(t);
                row.language = ex.language;
                row.predicted = static_cast<int>(std::max_element(f.logits.begin(), f.logits.end()) -
                                                 f.logits.begin());
                row.gold = gold.empty() ? -1 : gold[t];
                row.correct = row.gold == row.predicted;
                row.hidden = std::move(f.hidden);
                rows.push_back(std::move(row));
            }
        }
    }
    return rows;
}

void write_hidden_csv(std::ostream& os, const Pool& pool, const std::vector<HiddenRow>& rows,
                      int hidden_width) {
    os << "stable_id,token,language,predicted,gold,correct";
    for (int j = 0; j < hidden_width; ++j) os << ",h" << j;
    os << "\n";
    for (const auto& r : rows) {
        os << r.stable_id << ',' << r.token << ',' << pool.languages.at(static_cast<std::size_t>(r.language)).name
           << ',' << pool.labels.name_of(r.predicted) << ','
           << (r.gold < 0 ? std::string("?") : pool.labels.name_of(r.gold)) << ','
           << (r.correct ? 1 : 0);
        for (double v : r.hidden) os << ',' << nlohmann::json(v).dump();
        os << "\n";
    }
}

std::string save_model_json(const Model& model, const std::string& config_hash) {
    const auto& s = model.shape();
    nlohmann::json j;
    j["format"] = "selflearn-model";
    j["version"] = 1;
    j["config_hash"] = config_hash;
    j["shape"] = {{"input_dim", s.input_dim},
                  {"hidden", s.hidden},
                  {"classes", s.classes},
                  {"languages", s.languages},
                  {"activation", to_string(s.activation)}};
    j["params"] = Vec(model.params().begin(), model.params().end());
    return j.dump();
}

Model load_model_json(const std::string& text, std::string* config_hash) {
    nlohmann::json j = nlohmann::json::parse(text);
    if (j.value("format", "") != "selflearn-model" || j.value("version", 0) != 1) {
        throw std::invalid_argument("not a selflearn model checkpoint (version 1)");
    }
    ModelShape s;
    const auto& js = j.at("shape");
    s.input_dim = js.at("input_dim").get<int>();
    s.hidden = js.at("hidden").get<int>();
    s.classes = js.at("classes").get<int>();
    s.languages = js.at("languages").get<int>();
    s.activation = activation_from_string(js.at("activation").get<std::string>());
    Model m(s);
    auto params = j.at("params").get<Vec>();
    if (params.size() != m.size()) throw std::invalid_argument("checkpoint parameter count mismatch");
    std::copy(params.begin(), params.end(), m.params().begin());
    if (config_hash) *config_hash = j.value("config_hash", "");
    return m;
}

}  // namespace selflearn
