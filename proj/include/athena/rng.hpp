#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace athena {

/// Deterministic random generator with named substreams.
///
/// All randomness in a run flows from one root seed; independent components
/// derive their own stream via substream(), so adding parallelism or
/// reordering work never changes results. Samplers are hand-rolled (not
/// std::*_distribution) so output is stable across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    /// Child stream keyed by a name and up to two indices.
    Rng substream(std::string_view name, std::uint64_t a = 0, std::uint64_t b = 0) const;

    std::uint64_t next_u64();
    double uniform();                          // [0, 1)
    double uniform(double lo, double hi);      // [lo, hi)
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);  // inclusive
    double normal(double mean, double stddev);
    bool bernoulli(double p);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
            std::swap(v[i - 1], v[j]);
        }
    }

    /// k distinct indices drawn uniformly from [0, n).
    std::vector<std::size_t> choose(std::size_t n, std::size_t k);

private:
    std::uint64_t identity_;  // fixed at construction; substreams derive from it
    std::uint64_t state_;
};

}  // namespace athena
