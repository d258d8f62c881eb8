#include <doctest.h>

#include <cmath>
#include <set>

#include "selflearn/numerics.hpp"

using namespace selflearn;

TEST_SUITE("numerics") {

TEST_CASE("softmax is a distribution and shift invariant") {
    Vec l{1.0, -2.0, 0.5, 3.0};
    Vec p = softmax(l);
    double s = 0.0;
    for (double v : p) s += v;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-15));
    Vec shifted = l;
    for (double& v : shifted) v += 1000.0;
    Vec q = softmax(shifted);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(q[i] == doctest::Approx(p[i]).epsilon(1e-12));
}

TEST_CASE("softmax rejects bad input") {
    CHECK_THROWS_AS(softmax(Vec{}), std::invalid_argument);
    CHECK_THROWS_AS(softmax(Vec{1.0, NAN}), NumericError);
}

TEST_CASE("log_sum_exp survives large magnitudes") {
    Vec x{1000.0, 1000.0};
    CHECK(log_sum_exp(x) == doctest::Approx(1000.0 + std::log(2.0)));
    Vec y{-1000.0, -1000.0, -1000.0};
    CHECK(log_sum_exp(y) == doctest::Approx(-1000.0 + std::log(3.0)));
}

TEST_CASE("entropy") {
    CHECK(entropy(Vec{0.25, 0.25, 0.25, 0.25}) == doctest::Approx(std::log(4.0)));
    CHECK(entropy(Vec{1.0, 0.0}) == 0.0);
    // frozen oracle, computed independently
    CHECK(entropy(Vec{0.2, 0.3, 0.5}) == doctest::Approx(1.0296530140645737).epsilon(1e-14));
}

TEST_CASE("matvec checks dimensions") {
    Mat a(2, 3);
    a(0, 0) = 1; a(0, 2) = 2; a(1, 1) = -1;
    Vec y = matvec(a, Vec{1.0, 2.0, 3.0});
    CHECK(y == Vec{7.0, -2.0});
    CHECK_THROWS(matvec(a, Vec{1.0, 2.0}));
}

TEST_CASE("rng streams are reproducible and distinct") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng s1 = Rng::substream(42, 1), s2 = Rng::substream(42, 2);
    CHECK(s1.next_u64() != s2.next_u64());
    Rng t1 = Rng::substream(42, 3, 4), t2 = Rng::substream(42, 4, 3);
    CHECK(t1.next_u64() != t2.next_u64());
}

TEST_CASE("rng below covers its range uniformly enough") {
    Rng r(7);
    std::vector<int> counts(5, 0);
    for (int i = 0; i < 5000; ++i) {
        auto v = r.below(5);
        REQUIRE(v < 5);
        ++counts[static_cast<std::size_t>(v)];
    }
    for (int c : counts) CHECK(c > 850);
}

TEST_CASE("rng normal has unit moments") {
    Rng r(3);
    double s = 0, s2 = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        double x = r.normal();
        s += x;
        s2 += x * x;
    }
    CHECK(std::abs(s / n) < 0.03);
    CHECK(std::abs(s2 / n - 1.0) < 0.05);
}

TEST_CASE("shuffle is a permutation") {
    Rng r(9);
    std::vector<int> v(50);
    for (int i = 0; i < 50; ++i) v[static_cast<std::size_t>(i)] = i;
    r.shuffle(v);
    std::set<int> s(v.begin(), v.end());
    CHECK(s.size() == 50);
}

TEST_CASE("check_gradient on a known function") {
    auto f = [](std::span<const double> x) { return x[0] * x[0] * x[1] + std::sin(x[1]); };
    Vec x{0.7, -1.3};
    Vec g{2 * x[0] * x[1], x[0] * x[0] + std::cos(x[1])};
    CHECK(check_gradient(f, x, g, 1e-5) < 1e-8);
    Vec wrong{g[0], g[1] + 0.1};
    CHECK(check_gradient(f, x, wrong, 1e-5) > 1e-2);
}

}
