#pragma once

#include <cstdint>
#include <vector>

namespace micc {

// Small deterministic PRNG (splitmix64). All randomized steps in the
// toolkit draw from this generator so that a run is reproducible from its
// recorded seed alone, independent of the platform's std::random
// distributions.
class Rng {
  public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Unbiased integer in [0, bound). bound must be > 0.
    uint64_t next_below(uint64_t bound) {
        const uint64_t limit = bound * (UINT64_MAX / bound);
        uint64_t v = next();
        while (v >= limit)
            v = next();
        return v % bound;
    }

    // Uniform double in [0, 1).
    double next_double() { return double(next() >> 11) * 0x1.0p-53; }

    // Derive a stream for a sub-task; streams with distinct tags are
    // independent of draw order in the parent.
    Rng fork(uint64_t tag) const {
        Rng r(state_ ^ (0xa0761d6478bd642fULL * (tag + 1)));
        r.next();
        return r;
    }

    template <typename T> void shuffle(std::vector<T> &v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = size_t(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // First k entries of a Fisher-Yates shuffle: a uniform k-subset,
    // in random order.
    template <typename T>
    std::vector<T> sample_without_replacement(std::vector<T> pool, size_t k) {
        std::vector<T> out;
        out.reserve(k);
        for (size_t i = 0; i < k && i < pool.size(); ++i) {
            size_t j = i + size_t(next_below(pool.size() - i));
            std::swap(pool[i], pool[j]);
            out.push_back(pool[i]);
        }
        return out;
    }

  private:
    uint64_t state_;
};

} // namespace micc
