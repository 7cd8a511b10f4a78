#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "athena/loss.hpp"

#include <cmath>

using namespace athena;

TEST_CASE("perfect predictions give zero loss") {
    Mat probs(2, 3);
    probs << 1, 0, 0, 0, 0, 1;
    EdlResult r = edl_loss(probs, {0, 2}, {4, 9});
    CHECK(r.loss == doctest::Approx(0.0));
}

TEST_CASE("single sample closed form: n=1, p=e^-1") {
    Mat probs(1, 2);
    probs << std::exp(-1.0), 1.0 - std::exp(-1.0);
    EdlResult r = edl_loss(probs, {0}, {1});
    CHECK(r.cross_entropies[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.loss == doctest::Approx(std::exp(-0.1)).epsilon(1e-10));
    CHECK(r.loss == doctest::Approx(0.90484).epsilon(1e-5));
}

TEST_CASE("weight ratio between lengths 1 and 30 is e^2.9") {
    CHECK(edl_weight(1) / edl_weight(30) == doctest::Approx(std::exp(2.9)).epsilon(1e-12));
    CHECK(edl_weight(1) / edl_weight(30) == doctest::Approx(18.17).epsilon(1e-3));
}

TEST_CASE("two equal-CE samples combine with their weights") {
    const double p = std::exp(-1.0);
    Mat probs(2, 2);
    probs << p, 1 - p, p, 1 - p;
    EdlResult r = edl_loss(probs, {0, 0}, {1, 30});
    CHECK(r.loss == doctest::Approx(std::exp(-0.1) + std::exp(-3.0)).epsilon(1e-10));
}

TEST_CASE("weights strictly decrease with flow length") {
    for (int n = 1; n < 30; ++n) CHECK(edl_weight(n) > edl_weight(n + 1));
}

TEST_CASE("equal lengths reduce to scaled summed cross-entropy") {
    Mat probs(3, 2);
    probs << 0.7, 0.3, 0.2, 0.8, 0.5, 0.5;
    std::vector<int> labels{0, 1, 0};
    EdlResult r = edl_loss(probs, labels, {12, 12, 12});
    double plain = 0.0;
    for (int i = 0; i < 3; ++i) plain += -std::log(probs(i, labels[i]));
    CHECK(r.loss == doctest::Approx(std::exp(-1.2) * plain).epsilon(1e-12));
}

TEST_CASE("zero probability at the label is clamped, never NaN") {
    Mat probs(1, 2);
    probs << 0.0, 1.0;
    EdlResult r = edl_loss(probs, {0}, {5});
    CHECK(std::isfinite(r.loss));
    CHECK(r.loss > 0.0);
}

TEST_CASE("gradient is the weighted softmax-CE gradient") {
    Mat probs(1, 3);
    probs << 0.2, 0.5, 0.3;
    EdlResult r = edl_loss(probs, {1}, {10});
    double w = edl_weight(10);
    CHECK(r.dlogits(0, 0) == doctest::Approx(w * 0.2).epsilon(1e-12));
    CHECK(r.dlogits(0, 1) == doctest::Approx(w * (0.5 - 1.0)).epsilon(1e-12));
    CHECK(r.dlogits(0, 2) == doctest::Approx(w * 0.3).epsilon(1e-12));
}

TEST_CASE("input validation") {
    Mat probs(1, 2);
    probs << 0.5, 0.5;
    CHECK_THROWS_AS(edl_loss(probs, {0, 1}, {1}), ContractViolation);
    CHECK_THROWS_AS(edl_loss(probs, {5}, {1}), ContractViolation);
    CHECK_THROWS_AS(edl_loss(probs, {0}, {0}), ContractViolation);
}
