#pragma once

#include <cstdint>
#include <vector>

namespace lsm {

// SplitMix64. Used everywhere instead of <random> engines so that results
// are identical across platforms and standard libraries, which the
// reproducibility contract requires (same seed = same bytes out).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return next_unit() < p; }

    // Uniform in [0, n) by rejection; unbiased.
    std::uint64_t below(std::uint64_t n) {
        std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

private:
    std::uint64_t state_;
};

// Independent stream for (seed, index). Replicate i always sees the same
// stream no matter which worker runs it or in what order.
inline Rng stream_rng(std::uint64_t seed, std::uint64_t index) {
    Rng mixer(seed ^ (index * 0xA24BAED4963EE407ULL + 0x9E3779B97F4A7C15ULL));
    return Rng(mixer.next_u64());
}

// In-place Fisher-Yates.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(v[i - 1], v[j]);
    }
}

} // namespace lsm
