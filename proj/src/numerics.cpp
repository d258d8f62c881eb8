#include "selflearn/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace selflearn {

Vec matvec(const Mat& a, std::span<const double> x) {
    if (a.cols() != x.size()) {
        throw std::invalid_argument("matvec: dimension mismatch (" + std::to_string(a.cols()) +
                                    " vs " + std::to_string(x.size()) + ")");
    }
    Vec y(a.rows(), 0.0);
    for (std::size_t r = 0; r < a.rows(); ++r) y[r] = dot(a.row(r), x);
    return y;
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double l2_norm(std::span<const double> x) { return std::sqrt(dot(x, x)); }

bool all_finite(std::span<const double> x) {
    return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

void require_finite(std::span<const double> x, const char* what) {
    if (!all_finite(x)) throw NumericError(std::string(what) + ": non-finite value");
}

Vec softmax(std::span<const double> logits) {
    if (logits.empty()) throw std::invalid_argument("softmax: empty input");
    require_finite(logits, "softmax");
    double m = *std::max_element(logits.begin(), logits.end());
    Vec out(logits.size());
    double z = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - m);
        z += out[i];
    }
    for (double& v : out) v /= z;
    return out;
}

double entropy(std::span<const double> p) {
    if (p.empty()) throw std::invalid_argument("entropy: empty input");
    double total = 0.0;
    for (double v : p) {
        if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("entropy: not a distribution");
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("entropy: does not sum to 1");
    double h = 0.0;
    for (double v : p) {
        if (v > 0.0) h -= v * std::log(v);
    }
    return h;
}

double log_sum_exp(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("log_sum_exp: empty input");
    require_finite(xs, "log_sum_exp");
    if (xs.size() == 1) return xs[0];
    double m = *std::max_element(xs.begin(), xs.end());
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}

std::uint64_t mix64(std::uint64_t x) {
    // splitmix64 finalizer
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

Rng Rng::substream(std::uint64_t seed, std::uint64_t stream) {
    return Rng(mix64(mix64(seed) ^ (stream * 0xD1B54A32D192ED03ULL + 1)));
}

Rng Rng::substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    return substream(mix64(seed ^ mix64(a)), b);
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    double u1 = 0.0;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
}

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
    // rejection on the top of the range keeps the result unbiased
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = 0;
    do {
        x = engine_();
    } while (x >= limit);
    return x % n;
}

double check_gradient(const std::function<double(std::span<const double>)>& f,
                      std::span<const double> point, std::span<const double> analytic,
                      double step) {
    if (!(step > 0.0)) throw std::invalid_argument("check_gradient: step must be positive");
    if (point.size() != analytic.size()) {
        throw std::invalid_argument("check_gradient: gradient size mismatch");
    }
    Vec x(point.begin(), point.end());
    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double orig = x[i];
        x[i] = orig + step;
        double fp = f(x);
        x[i] = orig - step;
        double fm = f(x);
        x[i] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm)) {
            throw NumericError("check_gradient: non-finite function value at coordinate " +
                               std::to_string(i));
        }
        double numeric = (fp - fm) / (2.0 * step);
        double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
        worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
    }
    return worst;
}

}  // namespace selflearn
