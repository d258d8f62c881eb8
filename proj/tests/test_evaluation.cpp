#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "selflearn/evaluation.hpp"
#include "selflearn/numerics.hpp"

using namespace selflearn;

namespace {

// Pair counting: a (correct, wrong) pair scores 1 when the correct item is
// more certain, 1/2 on a gamma tie.
double brute_auroc(const std::vector<AurocSample>& s) {
    double num = 0.0;
    long pairs = 0;
    for (const auto& a : s) {
        if (!a.correct) continue;
        for (const auto& b : s) {
            if (b.correct) continue;
            ++pairs;
            if (a.gamma < b.gamma) num += 1.0;
            else if (a.gamma == b.gamma) num += 0.5;
        }
    }
    return num / static_cast<double>(pairs);
}

}  // namespace

TEST_SUITE("evaluation") {

TEST_CASE("auroc examples") {
    CHECK(auroc({{0.1, true}, {0.9, false}}) == 1.0);
    CHECK(auroc({{0.9, true}, {0.1, false}}) == 0.0);
    CHECK(auroc({{0.5, true}, {0.5, false}}) == 0.5);
    CHECK(auroc({{0.1, true}, {0.2, false}, {0.3, true}, {0.4, false}}) == 0.75);
    CHECK_THROWS_AS(auroc({{0.1, true}, {0.2, true}}), UndefinedMetric);
    CHECK_THROWS_AS(auroc({}), UndefinedMetric);
    CHECK_THROWS(auroc({{NAN, true}, {0.2, false}}));
}

TEST_CASE("auroc equals pair counting on random cases") {
    Rng r(5);
    int checked = 0;
    while (checked < 1000) {
        const int n = 2 + static_cast<int>(r.below(11));
        std::vector<AurocSample> s;
        for (int i = 0; i < n; ++i) s.push_back({static_cast<double>(r.below(5)), r.below(2) == 1});
        bool pos = false, neg = false;
        for (const auto& x : s) (x.correct ? pos : neg) = true;
        if (!pos || !neg) continue;
        CHECK(auroc(s) == brute_auroc(s));
        ++checked;
    }
}

TEST_CASE("auroc is invariant under strictly increasing transforms") {
    Rng r(6);
    for (int t = 0; t < 200; ++t) {
        std::vector<AurocSample> s, w;
        for (int i = 0; i < 20; ++i) {
            double g = r.normal();
            bool c = r.below(2) == 1;
            s.push_back({g, c});
            w.push_back({std::atan(g) * 5.0 + 1.0, c});
        }
        s.push_back({0.0, true});
        s.push_back({0.0, false});
        w.push_back({1.0, true});
        w.push_back({1.0, false});
        CHECK(auroc(s) == auroc(w));
    }
}

TEST_CASE("span f1") {
    std::vector<std::vector<Span>> gold{{{0, 2, 0}, {3, 4, 1}}, {}};
    std::vector<std::vector<Span>> pred{{{0, 2, 0}, {3, 4, 0}}, {{1, 2, 1}}};
    auto prf = span_f1(gold, pred);
    CHECK(prf.true_positive == 1);
    CHECK(prf.predicted == 3);
    CHECK(prf.gold == 2);
    CHECK(prf.precision == doctest::Approx(1.0 / 3.0));
    CHECK(prf.recall == 0.5);
    CHECK(prf.f1 == doctest::Approx(0.4));
    auto empty = span_f1({{}}, {{}});
    CHECK(empty.f1 == 0.0);
    CHECK_THROWS(span_f1({{}}, {}));
    // boundary mismatch is a miss
    CHECK(span_f1({{{0, 2, 0}}}, {{{0, 1, 0}}}).f1 == 0.0);
}

TEST_CASE("prf from counts") {
    auto p = prf_from_counts(3, 4, 6);
    CHECK(p.precision == 0.75);
    CHECK(p.recall == 0.5);
    CHECK(p.f1 == doctest::Approx(0.6));
    CHECK(prf_from_counts(0, 0, 0).f1 == 0.0);
}

TEST_CASE("accuracy") {
    CHECK(accuracy({0, 1, 2, 1}, {0, 1, 1, 1}) == 0.75);
    CHECK_THROWS(accuracy({0}, {0, 1}));
    CHECK_THROWS(accuracy({}, {}));
}

TEST_CASE("histograms") {
    auto h = gamma_histogram({"a", "b"}, {{0.0, 0.5, 1.0, 1.0}, {2.0, 2.0}}, 4);
    REQUIRE(h.size() == 2);
    CHECK(h[0].low == 0.0);
    CHECK(h[0].high == 1.0);
    CHECK(h[0].counts == std::vector<long>{1, 0, 1, 2});
    CHECK(h[1].counts == std::vector<long>{2, 0, 0, 0});
    Rng r(1);
    for (int t = 0; t < 100; ++t) {
        std::vector<double> v;
        const int n = 1 + static_cast<int>(r.below(50));
        for (int i = 0; i < n; ++i) v.push_back(r.normal());
        auto hh = gamma_histogram({"x"}, {v}, 1 + static_cast<int>(r.below(30)));
        CHECK(std::accumulate(hh[0].counts.begin(), hh[0].counts.end(), 0L) == n);
        if (n >= 2) CHECK(hh[0].counts.back() >= 1);
    }
    CHECK_THROWS(gamma_histogram({"a"}, {{1.0}}, 0));
    std::ostringstream os;
    write_histogram_csv(os, h);
    CHECK(os.str().find("b,") != std::string::npos);
}

}
