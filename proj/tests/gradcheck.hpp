#pragma once

// Central-difference checks of the per-item head gradients, shared by the
// unit tests and the acceptance binary.

#include "selflearn/estimators.hpp"

namespace testing_util {

using namespace selflearn;

struct GradPoint {
    Vec logits;
    Vec logvar;
    double logsigma = 0.0;
    int gold = 0;
};

inline GradPoint random_point(Rng& rng, int classes) {
    GradPoint p;
    for (int c = 0; c < classes; ++c) {
        p.logits.push_back(2.0 * rng.normal());
        p.logvar.push_back(-2.0 + 1.5 * rng.normal());
    }
    p.logsigma = 0.5 * rng.normal();
    p.gold = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
    return p;
}

// Largest relative error over every input the loss depends on.
inline double head_gradient_error(LossKind kind, const GradPoint& p, std::uint64_t noise_seed) {
    const std::size_t C = p.logits.size();
    const int T = 8;
    auto eval = [&](std::span<const double> x) {
        Vec logits(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(C));
        Vec logvar(x.begin() + static_cast<std::ptrdiff_t>(C), x.begin() + static_cast<std::ptrdiff_t>(2 * C));
        Rng r(noise_seed);
        switch (kind) {
            case LossKind::CrossEntropy: return ce_loss(logits, p.gold);
            case LossKind::Heteroscedastic: return leu_loss(logits, logvar, p.gold, T, r);
            case LossKind::Homoscedastic: return lou_loss(logits, p.gold, x[2 * C]);
            case LossKind::Evidential: return evi_loss(logits, p.gold);
        }
        return 0.0;
    };
    Vec x = p.logits;
    x.insert(x.end(), p.logvar.begin(), p.logvar.end());
    x.push_back(p.logsigma);

    Rng r(noise_seed);
    HeadGradient g = loss_grad(kind, p.logits, p.logvar, p.logsigma, p.gold, T, r);
    if (g.d_logvar.empty()) g.d_logvar.assign(C, 0.0);
    Vec analytic = g.d_logits;
    analytic.insert(analytic.end(), g.d_logvar.begin(), g.d_logvar.end());
    analytic.push_back(g.d_logsigma);
    return check_gradient(eval, x, analytic, 1e-5);
}

}  // namespace testing_util
