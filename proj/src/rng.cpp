#include "athena/rng.hpp"

#include <cmath>
#include <numbers>

namespace athena {
namespace {

// splitmix64; used both as the stream generator and as the seed mixer.
std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

Rng::Rng(std::uint64_t seed) : identity_(seed), state_(seed) {
    // decorrelate trivially related seeds
    splitmix64(state_);
    identity_ = state_;
}

Rng Rng::substream(std::string_view name, std::uint64_t a, std::uint64_t b) const {
    std::uint64_t mix = identity_;
    mix ^= fnv1a(name);
    splitmix64(mix);
    mix ^= a * 0x9e3779b97f4a7c15ULL;
    splitmix64(mix);
    mix ^= b * 0xd1b54a32d192ed03ULL;
    return Rng(mix);
}

std::uint64_t Rng::next_u64() { return splitmix64(state_); }

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
    auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return lo + static_cast<std::int64_t>(next_u64());  // full range
    // rejection sampling to avoid modulo bias
    std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % span + 1) % span;
    std::uint64_t r;
    do {
        r = next_u64();
    } while (r > limit);
    return lo + static_cast<std::int64_t>(r % span);
}

double Rng::normal(double mean, double stddev) {
    // Box-Muller; the spare half is discarded to keep draws stateless.
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * std::numbers::pi * u2);
}

bool Rng::bernoulli(double p) { return uniform() < p; }

std::vector<std::size_t> Rng::choose(std::size_t n, std::size_t k) {
    if (k > n) k = n;
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    // partial Fisher-Yates
    for (std::size_t i = 0; i < k; ++i) {
        auto j = static_cast<std::size_t>(uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(n) - 1));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
}

}  // namespace athena
