#include <doctest.h>

#include <flarekit/parallel.hpp>
#include <flarekit/rng.hpp>

#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

using namespace flarekit;

TEST_CASE("SplitMix64 reference outputs for seed 0") {
    Rng rng(0);
    CHECK(rng.next_u64() == 0xE220A8397B1DCDAFull);
    CHECK(rng.next_u64() == 0x6E789E6AA1B965F4ull);
    CHECK(rng.next_u64() == 0x06C45D188009454Full);
    CHECK(rng.next_u64() == 0xF88BB8A8724C81ECull);
    CHECK(rng.position() == 4);
}

TEST_CASE("uniform stays in range and collapsed ranges still consume a draw") {
    Rng a(5), b(5);
    for (int i = 0; i < 1000; ++i) {
        const double u = a.uniform(-2.0, 3.0);
        CHECK(u >= -2.0);
        CHECK(u < 3.0);
    }
    CHECK(b.uniform(1.0, 1.0) == 1.0);
    CHECK(b.position() == 1);
}

TEST_CASE("normal draws have unit moments") {
    Rng rng(42);
    const int n = 200000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = rng.normal();
        s += v;
        s2 += v * v;
    }
    CHECK(std::abs(s / n) < 5.0 / std::sqrt(n));
    CHECK(std::abs(s2 / n - 1.0) < 5.0 * std::sqrt(2.0 / n));
}

TEST_CASE("derived seeds differ per index and are stable") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(Rng::derive(7, i));
    CHECK(seen.size() == 1000);
    CHECK(Rng::derive(7, 3) == Rng::derive(7, 3));
    CHECK(Rng::derive(7, 3) != Rng::derive(8, 3));
}

TEST_CASE("parallel_for covers every index once and rethrows the lowest failure") {
    for (unsigned threads : {1u, 3u, 8u}) {
        std::vector<int> hits(100, 0);
        parallel_for(hits.size(), threads, [&](std::size_t i) { hits[i] += 1; });
        for (int h : hits) CHECK(h == 1);
    }
    try {
        parallel_for(50, 4, [](std::size_t i) {
            if (i == 10 || i == 30) throw std::runtime_error(std::to_string(i));
        });
        FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()) == "10");
    }
}
