#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace selflearn {

using Vec = std::vector<double>;

/// Raised when a loss or score stops being finite.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Row-major dense matrix with checked dimensions.
class Mat {
public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::span<double> flat() { return data_; }
    std::span<const double> flat() const { return data_; }

    bool operator==(const Mat&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    Vec data_;
};

/// y = A x, validated.
Vec matvec(const Mat& a, std::span<const double> x);
double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> x);

/// Throws NumericError naming `what` if any entry is NaN or infinite.
void require_finite(std::span<const double> x, const char* what);
bool all_finite(std::span<const double> x);

/// Softmax via max-subtraction. Throws std::invalid_argument on empty and
/// NumericError on non-finite input.
Vec softmax(std::span<const double> logits);

/// Shannon entropy in nats, 0 ln 0 = 0. Input must be a distribution within 1e-9.
double entropy(std::span<const double> p);

/// log sum exp(x_i), max-shifted.
double log_sum_exp(std::span<const double> xs);

/// Reproducible random stream.
///
/// The bit stream is std::mt19937_64, whose output sequence is fixed by the
/// standard. The uniform/normal transforms are implemented here rather than
/// with <random> distributions because those are implementation-defined and
/// would break cross-platform reproducibility.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Independent stream keyed by (seed, stream). Used to give every example
    /// its own noise regardless of thread scheduling.
    static Rng substream(std::uint64_t seed, std::uint64_t stream);
    static Rng substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform in [0, 1) with 53 random bits.
    double uniform();
    /// Standard normal (Box-Muller, one cached value).
    double normal();
    /// Uniform integer in [0, n), unbiased.
    std::uint64_t below(std::uint64_t n);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    bool has_cached_ = false;
    double cached_ = 0.0;
};

std::uint64_t mix64(std::uint64_t x);

/// Compares an analytic gradient to central differences coordinate by
/// coordinate and returns the largest relative error, with the denominator
/// max(|analytic|, |numeric|, 1e-8).
double check_gradient(const std::function<double(std::span<const double>)>& f,
                      std::span<const double> point, std::span<const double> analytic,
                      double step);

}  // namespace selflearn
