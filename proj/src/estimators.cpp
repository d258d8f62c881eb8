#include "selflearn/estimators.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

namespace selflearn {

namespace {

void check_gold(std::span<const double> logits, int gold) {
    if (gold < 0 || static_cast<std::size_t>(gold) >= logits.size()) {
        throw std::invalid_argument("gold class out of range");
    }
}

void check_same_size(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("logits/logvar size mismatch");
}

int argmax(std::span<const double> v) {
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

// Draws T perturbed logit vectors in the documented order.
std::vector<Vec> sample_logits(std::span<const double> logits, std::span<const double> logvar,
                               int samples, Rng& rng, Vec& noise) {
    const std::size_t c = logits.size();
    std::vector<Vec> out(static_cast<std::size_t>(samples), Vec(c));
    noise.assign(static_cast<std::size_t>(samples) * c, 0.0);
    for (std::size_t t = 0; t < out.size(); ++t) {
        for (std::size_t k = 0; k < c; ++k) {
            double eps = rng.normal();
            noise[t * c + k] = eps;
            out[t][k] = logits[k] + std::exp(0.5 * logvar[k]) * eps;
        }
    }
    return out;
}

}  // namespace

std::string to_string(EstimatorKind k) {
    switch (k) {
        case EstimatorKind::MPR: return "MPR";
        case EstimatorKind::ENT: return "ENT";
        case EstimatorKind::EVI: return "EVI";
        case EstimatorKind::LOU: return "LOU";
        case EstimatorKind::LEU: return "LEU";
    }
    return "?";
}

EstimatorKind estimator_from_string(const std::string& s) {
    std::string u = s;
    std::transform(u.begin(), u.end(), u.begin(), [](unsigned char c) { return std::toupper(c); });
    for (auto k : {EstimatorKind::MPR, EstimatorKind::ENT, EstimatorKind::EVI, EstimatorKind::LOU,
                   EstimatorKind::LEU}) {
        if (u == to_string(k)) return k;
    }
    throw std::invalid_argument("unknown estimator '" + s + "'");
}

void EstimatorConfig::validate() const {
    if (mc_samples < 1) throw std::invalid_argument("mc_samples must be >= 1");
    if (!(evi_alpha >= 0.0) || !std::isfinite(evi_alpha)) {
        throw std::invalid_argument("evi_alpha must be finite and >= 0");
    }
}

LossKind training_loss(EstimatorKind k) {
    switch (k) {
        case EstimatorKind::LEU: return LossKind::Heteroscedastic;
        case EstimatorKind::LOU: return LossKind::Homoscedastic;
        case EstimatorKind::EVI: return LossKind::Evidential;
        default: return LossKind::CrossEntropy;
    }
}

std::string to_string(LossKind k) {
    switch (k) {
        case LossKind::CrossEntropy: return "cross-entropy";
        case LossKind::Heteroscedastic: return "heteroscedastic";
        case LossKind::Homoscedastic: return "homoscedastic";
        case LossKind::Evidential: return "evidential";
    }
    return "?";
}

// ---- cross-entropy -------------------------------------------------------

double ce_loss(std::span<const double> logits, int gold) {
    check_gold(logits, gold);
    return log_sum_exp(logits) - logits[static_cast<std::size_t>(gold)];
}

HeadGradient ce_loss_grad(std::span<const double> logits, int gold) {
    HeadGradient g;
    g.loss = ce_loss(logits, gold);
    g.d_logits = softmax(logits);
    g.d_logits[static_cast<std::size_t>(gold)] -= 1.0;
    g.d_logvar.assign(logits.size(), 0.0);
    return g;
}

// ---- LEU -----------------------------------------------------------------

Vec leu_probs(std::span<const double> logits, std::span<const double> logvar, int samples, Rng& rng) {
    check_same_size(logits, logvar);
    if (samples < 1) throw std::invalid_argument("leu_probs: samples must be >= 1");
    Vec noise;
    auto draws = sample_logits(logits, logvar, samples, rng, noise);
    Vec mean(logits.size(), 0.0);
    for (const auto& g : draws) {
        Vec p = softmax(g);
        for (std::size_t k = 0; k < p.size(); ++k) mean[k] += p[k];
    }
    for (double& v : mean) v /= samples;
    return mean;
}

double leu_loss(std::span<const double> logits, std::span<const double> logvar, int gold,
                int samples, Rng& rng) {
    check_same_size(logits, logvar);
    check_gold(logits, gold);
    if (samples < 1) throw std::invalid_argument("leu_loss: samples must be >= 1");
    Vec noise;
    auto draws = sample_logits(logits, logvar, samples, rng, noise);
    Vec neg_ce(draws.size());
    for (std::size_t t = 0; t < draws.size(); ++t) neg_ce[t] = -ce_loss(draws[t], gold);
    return std::log(static_cast<double>(samples)) - log_sum_exp(neg_ce);
}

HeadGradient leu_loss_grad(std::span<const double> logits, std::span<const double> logvar,
                           int gold, int samples, Rng& rng) {
    check_same_size(logits, logvar);
    check_gold(logits, gold);
    if (samples < 1) throw std::invalid_argument("leu_loss_grad: samples must be >= 1");
    const std::size_t c = logits.size();
    Vec noise;
    auto draws = sample_logits(logits, logvar, samples, rng, noise);

    Vec neg_ce(draws.size());
    std::vector<Vec> probs(draws.size());
    for (std::size_t t = 0; t < draws.size(); ++t) {
        probs[t] = softmax(draws[t]);
        neg_ce[t] = -ce_loss(draws[t], gold);
    }
    HeadGradient g;
    g.loss = std::log(static_cast<double>(samples)) - log_sum_exp(neg_ce);
    // dL/dCE_t is the softmax weight of sample t under exp(-CE_t).
    Vec weight = softmax(neg_ce);
    g.d_logits.assign(c, 0.0);
    g.d_logvar.assign(c, 0.0);
    for (std::size_t t = 0; t < draws.size(); ++t) {
        for (std::size_t k = 0; k < c; ++k) {
            double dce = probs[t][k] - (static_cast<int>(k) == gold ? 1.0 : 0.0);
            double w = weight[t] * dce;
            g.d_logits[k] += w;
            g.d_logvar[k] += w * 0.5 * std::exp(0.5 * logvar[k]) * noise[t * c + k];
        }
    }
    return g;
}

double leu_uncertainty(std::span<const double> probs) { return entropy(probs); }

// ---- LOU -----------------------------------------------------------------

Vec lou_scaled_probs(std::span<const double> logits, double logsigma) {
    if (!std::isfinite(logsigma)) throw NumericError("lou_scaled_probs: non-finite logsigma");
    double inv_var = std::exp(-2.0 * logsigma);
    Vec scaled(logits.begin(), logits.end());
    for (double& v : scaled) v *= inv_var;
    return softmax(scaled);
}

double lou_loss(std::span<const double> logits, int gold, double logsigma) {
    return std::exp(-2.0 * logsigma) * ce_loss(logits, gold) + logsigma;
}

HeadGradient lou_loss_grad(std::span<const double> logits, int gold, double logsigma) {
    HeadGradient g = ce_loss_grad(logits, gold);
    double ce = g.loss;
    double inv_var = std::exp(-2.0 * logsigma);
    g.loss = inv_var * ce + logsigma;
    for (double& v : g.d_logits) v *= inv_var;
    g.d_logsigma = -2.0 * inv_var * ce + 1.0;
    return g;
}

// ---- EVI -----------------------------------------------------------------

double evidence_activation(double raw) { return raw > 0.0 ? raw + 1.0 : std::exp(raw); }

double evidence_activation_derivative(double raw) { return raw > 0.0 ? 1.0 : std::exp(raw); }

Evidence evi_from_evidence(std::span<const double> evidence) {
    if (evidence.size() < 2) throw std::invalid_argument("evidential head needs |C| >= 2");
    Evidence out;
    out.evidence.assign(evidence.begin(), evidence.end());
    const double classes = static_cast<double>(evidence.size());
    double total = 0.0;
    for (double e : evidence) {
        if (!(e >= 0.0) || !std::isfinite(e)) throw std::invalid_argument("evidence must be finite and >= 0");
        total += e;
    }
    out.strength = total + classes;
    out.vacuity = classes / out.strength;
    out.belief.resize(evidence.size());
    out.probs.resize(evidence.size());
    for (std::size_t k = 0; k < evidence.size(); ++k) {
        out.belief[k] = evidence[k] / out.strength;
        out.probs[k] = (evidence[k] + 1.0) / out.strength;
    }
    return out;
}

Evidence evi_from_raw(std::span<const double> raw_logits) {
    require_finite(raw_logits, "evi_from_raw");
    Vec e(raw_logits.size());
    for (std::size_t k = 0; k < e.size(); ++k) e[k] = evidence_activation(raw_logits[k]);
    return evi_from_evidence(e);
}

double evi_dissonance(std::span<const double> belief) {
    double diss = 0.0;
    for (std::size_t c = 0; c < belief.size(); ++c) {
        double others = 0.0;
        double balanced = 0.0;
        for (std::size_t k = 0; k < belief.size(); ++k) {
            if (k == c) continue;
            others += belief[k];
            if (belief[c] * belief[k] != 0.0) {
                double bal = 1.0 - std::abs(belief[c] - belief[k]) / (belief[c] + belief[k]);
                balanced += belief[k] * bal;
            }
        }
        if (others > 0.0) diss += belief[c] * balanced / others;
    }
    return diss;
}

double evi_loss(std::span<const double> raw_logits, int gold) {
    check_gold(raw_logits, gold);
    Evidence ev = evi_from_raw(raw_logits);
    double loss = 0.0;
    for (std::size_t k = 0; k < ev.probs.size(); ++k) {
        double y = static_cast<int>(k) == gold ? 1.0 : 0.0;
        double p = ev.probs[k];
        loss += (y - p) * (y - p) + p * (1.0 - p) / (ev.strength + 1.0);
    }
    return loss;
}

HeadGradient evi_loss_grad(std::span<const double> raw_logits, int gold) {
    check_gold(raw_logits, gold);
    Evidence ev = evi_from_raw(raw_logits);
    const std::size_t c = ev.probs.size();
    const double s = ev.strength;

    HeadGradient g;
    // Partial derivatives of the loss with p and S treated as independent.
    Vec dp(c);
    double ds = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
        double y = static_cast<int>(k) == gold ? 1.0 : 0.0;
        double p = ev.probs[k];
        g.loss += (y - p) * (y - p) + p * (1.0 - p) / (s + 1.0);
        dp[k] = -2.0 * (y - p) + (1.0 - 2.0 * p) / (s + 1.0);
        ds -= p * (1.0 - p) / ((s + 1.0) * (s + 1.0));
    }
    // p_c = (e_c + 1) / S  =>  dp_c/de_k = (delta_ck - p_c) / S, dS/de_k = 1.
    double dp_dot_p = 0.0;
    for (std::size_t k = 0; k < c; ++k) dp_dot_p += dp[k] * ev.probs[k];
    g.d_logits.resize(c);
    for (std::size_t k = 0; k < c; ++k) {
        double de = (dp[k] - dp_dot_p) / s + ds;
        g.d_logits[k] = de * evidence_activation_derivative(raw_logits[k]);
    }
    g.d_logvar.assign(c, 0.0);
    return g;
}

double evi_uncertainty(double vacuity, double dissonance, double alpha) {
    return dissonance + alpha * vacuity;
}

// ---- baselines -----------------------------------------------------------

double mpr_uncertainty(std::span<const double> probs) {
    if (probs.empty()) throw std::invalid_argument("mpr_uncertainty: empty input");
    return -*std::max_element(probs.begin(), probs.end());
}

double ent_uncertainty(std::span<const double> probs) { return entropy(probs); }

// ---- unified -------------------------------------------------------------

Estimate estimate(const EstimatorConfig& cfg, std::span<const double> logits,
                  std::span<const double> logvar, double logsigma, Rng& rng) {
    Estimate out;
    switch (cfg.kind) {
        case EstimatorKind::MPR:
            out.probs = softmax(logits);
            out.score.gamma = mpr_uncertainty(out.probs);
            break;
        case EstimatorKind::ENT:
            out.probs = softmax(logits);
            out.score.gamma = ent_uncertainty(out.probs);
            break;
        case EstimatorKind::LEU:
            out.probs = leu_probs(logits, logvar, cfg.mc_samples, rng);
            out.score.gamma = leu_uncertainty(out.probs);
            break;
        case EstimatorKind::LOU:
            out.probs = lou_scaled_probs(logits, logsigma);
            out.score.gamma = entropy(out.probs);
            break;
        case EstimatorKind::EVI: {
            Evidence ev = evi_from_raw(logits);
            double diss = evi_dissonance(ev.belief);
            out.probs = ev.probs;
            out.score.gamma = evi_uncertainty(ev.vacuity, diss, cfg.evi_alpha);
            out.score.vacuity = ev.vacuity;
            out.score.dissonance = diss;
            break;
        }
    }
    if (!std::isfinite(out.score.gamma)) throw NumericError("non-finite uncertainty score");
    out.predicted = argmax(out.probs);
    return out;
}

HeadGradient loss_grad(LossKind kind, std::span<const double> logits,
                       std::span<const double> logvar, double logsigma, int gold,
                       int mc_samples, Rng& rng) {
    switch (kind) {
        case LossKind::CrossEntropy: return ce_loss_grad(logits, gold);
        case LossKind::Heteroscedastic: return leu_loss_grad(logits, logvar, gold, mc_samples, rng);
        case LossKind::Homoscedastic: return lou_loss_grad(logits, gold, logsigma);
        case LossKind::Evidential: return evi_loss_grad(logits, gold);
    }
    throw std::invalid_argument("unknown loss kind");
}

}  // namespace selflearn
