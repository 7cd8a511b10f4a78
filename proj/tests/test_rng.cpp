#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "athena/rng.hpp"

#include <cmath>
#include <set>

using namespace athena;

TEST_CASE("same seed, same stream") {
    Rng a(123), b(123);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("substreams are independent of draw order") {
    Rng root(7);
    Rng s1 = root.substream("alpha", 3);
    root.next_u64();  // consuming the parent must not affect children
    Rng s2 = root.substream("alpha", 3);
    for (int i = 0; i < 10; ++i) CHECK(s1.next_u64() == s2.next_u64());

    Rng other = root.substream("beta", 3);
    CHECK(other.next_u64() != root.substream("alpha", 3).next_u64());
}

TEST_CASE("uniform stays in range and covers it") {
    Rng rng(11);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 10000; ++i) {
        double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    CHECK(lo < 0.01);
    CHECK(hi > 0.99);
}

TEST_CASE("uniform_int is inclusive on both ends") {
    Rng rng(13);
    std::set<std::int64_t> seen;
    for (int i = 0; i < 1000; ++i) seen.insert(rng.uniform_int(2, 5));
    CHECK(seen == std::set<std::int64_t>{2, 3, 4, 5});
    for (int i = 0; i < 10; ++i) CHECK(rng.uniform_int(7, 7) == 7);
}

TEST_CASE("normal moments are roughly right") {
    Rng rng(17);
    double sum = 0.0, sq = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        double x = rng.normal(2.0, 3.0);
        sum += x;
        sq += x * x;
    }
    double mean = sum / n;
    double var = sq / n - mean * mean;
    CHECK(mean == doctest::Approx(2.0).epsilon(0.05));
    CHECK(std::sqrt(var) == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("choose returns distinct indices") {
    Rng rng(19);
    auto picks = rng.choose(50, 20);
    CHECK(picks.size() == 20);
    std::set<std::size_t> unique(picks.begin(), picks.end());
    CHECK(unique.size() == 20);
    for (auto p : picks) CHECK(p < 50);

    CHECK(rng.choose(5, 10).size() == 5);
    CHECK(rng.choose(5, 0).empty());
}

TEST_CASE("shuffle permutes deterministically under one seed") {
    std::vector<int> a{1, 2, 3, 4, 5, 6, 7, 8};
    auto b = a;
    Rng r1(23), r2(23);
    r1.shuffle(a);
    r2.shuffle(b);
    CHECK(a == b);
}
