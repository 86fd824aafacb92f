#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace chainbench {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Independent stream derived from one manifest-recorded seed; stream 1+i is
// used for chain i so parallel construction is schedule-independent.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(seed ^ splitmix64(index + 1));
}

// mt19937_64 plus rejection-sampled bounded draws. std::uniform_int_distribution
// is implementation-defined, so byte-stable outputs must not go through it.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform in [0, bound).
    std::uint64_t below(std::uint64_t bound) {
        if (bound == 0) throw std::invalid_argument("Rng::below: bound == 0");
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
        while (true) {
            std::uint64_t x = engine_();
            if (x < limit) return x % bound;
        }
    }

    std::size_t index(std::size_t size) {
        return static_cast<std::size_t>(below(static_cast<std::uint64_t>(size)));
    }

    // [0, 1); for retry jitter, not for anything reproducibility-critical.
    double unit() {
        return static_cast<double>(engine_() >> 11) * (1.0 / 9007199254740992.0);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace chainbench
