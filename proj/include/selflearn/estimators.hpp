#pragma once

#include <optional>
#include <span>
#include <string>

#include "selflearn/numerics.hpp"

namespace selflearn {

/// Uncertainty estimators. Every estimator follows the same ordering
/// contract: a larger gamma means a less trustworthy prediction.
enum class EstimatorKind { MPR, ENT, EVI, LOU, LEU };

std::string to_string(EstimatorKind k);
EstimatorKind estimator_from_string(const std::string& s);

struct EstimatorConfig {
    EstimatorKind kind = EstimatorKind::MPR;
    int mc_samples = 20;      // LEU Monte Carlo draws
    double evi_alpha = 1.0;   // EVI vacuity weight
    void validate() const;
};

/// Loss optimized by the classifier. MPR and ENT score plain softmax
/// outputs, so both train with cross-entropy.
enum class LossKind { CrossEntropy, Heteroscedastic, Homoscedastic, Evidential };
LossKind training_loss(EstimatorKind k);
std::string to_string(LossKind k);

/// Loss value plus gradients with respect to the three head outputs.
struct HeadGradient {
    double loss = 0.0;
    Vec d_logits;
    Vec d_logvar;           // zero unless the loss uses the variance head
    double d_logsigma = 0;  // per-language temperature, homoscedastic only
};

// ---- cross-entropy -------------------------------------------------------

double ce_loss(std::span<const double> logits, int gold);
HeadGradient ce_loss_grad(std::span<const double> logits, int gold);

// ---- heteroscedastic (LEU) -----------------------------------------------
//
// Logits are perturbed as g_t = logits + exp(logvar / 2) * eps_t with
// eps_t ~ N(0, I), drawn class by class for t = 1..T from `rng`. Functions
// that share an rng state therefore see the same draws.

Vec leu_probs(std::span<const double> logits, std::span<const double> logvar, int samples, Rng& rng);
/// -log (1/T) sum_t exp(-CE(g_t, gold)).
double leu_loss(std::span<const double> logits, std::span<const double> logvar, int gold,
                int samples, Rng& rng);
HeadGradient leu_loss_grad(std::span<const double> logits, std::span<const double> logvar,
                           int gold, int samples, Rng& rng);
double leu_uncertainty(std::span<const double> probs);

// ---- homoscedastic (LOU) -------------------------------------------------

/// softmax(logits / sigma^2) with sigma^2 = exp(2 * logsigma).
Vec lou_scaled_probs(std::span<const double> logits, double logsigma);
/// CE(softmax(logits), gold) / sigma^2 + log sigma.
double lou_loss(std::span<const double> logits, int gold, double logsigma);
HeadGradient lou_loss_grad(std::span<const double> logits, int gold, double logsigma);

// ---- evidential (EVI) ----------------------------------------------------

struct Evidence {
    Vec evidence;   // e_c = elu(raw_c) + 1
    double strength = 0;  // S = sum e_c + |C|
    Vec belief;     // b_c = e_c / S
    double vacuity = 0;   // |C| / S
    Vec probs;      // (e_c + 1) / S
};

double evidence_activation(double raw);
double evidence_activation_derivative(double raw);
Evidence evi_from_raw(std::span<const double> raw_logits);
/// Builds the Dirichlet bookkeeping straight from non-negative evidence.
Evidence evi_from_evidence(std::span<const double> evidence);
double evi_dissonance(std::span<const double> belief);
double evi_loss(std::span<const double> raw_logits, int gold);
HeadGradient evi_loss_grad(std::span<const double> raw_logits, int gold);
double evi_uncertainty(double vacuity, double dissonance, double alpha);

// ---- plain softmax baselines --------------------------------------------

/// -max_c p_c
double mpr_uncertainty(std::span<const double> probs);
double ent_uncertainty(std::span<const double> probs);

// ---- unified interface ---------------------------------------------------

struct UncertaintyScore {
    double gamma = 0.0;
    std::optional<double> vacuity;
    std::optional<double> dissonance;
};

struct Estimate {
    Vec probs;
    int predicted = 0;
    UncertaintyScore score;
};

/// Probabilities, prediction and gamma for one item under the configured
/// estimator. `rng` is only consumed by LEU.
Estimate estimate(const EstimatorConfig& cfg, std::span<const double> logits,
                  std::span<const double> logvar, double logsigma, Rng& rng);

/// Training loss and head gradients for one item.
HeadGradient loss_grad(LossKind kind, std::span<const double> logits,
                       std::span<const double> logvar, double logsigma, int gold,
                       int mc_samples, Rng& rng);

}  // namespace selflearn
