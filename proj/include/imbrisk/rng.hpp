#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace imbrisk {

/// splitmix64 finalizer; used for seed derivation.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_tag(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t derive_seed(std::uint64_t seed) { return mix64(seed); }

template <typename First, typename... Rest>
std::uint64_t derive_seed(std::uint64_t seed, First first, Rest... rest) {
    std::uint64_t part;
    if constexpr (std::is_convertible_v<First, std::string_view>) {
        part = hash_tag(first);
    } else {
        part = static_cast<std::uint64_t>(first);
    }
    return derive_seed(mix64(seed ^ mix64(part)), rest...);
}

/// Seeded generator with hand-rolled distributions so that streams are
/// identical across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform double in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform index in [0, n). Rejection sampling keeps it unbiased.
    std::size_t index(std::size_t n) {
        const std::uint64_t bound = n;
        const std::uint64_t threshold = (-bound) % bound;
        for (;;) {
            const std::uint64_t x = engine_();
            if (x >= threshold) return static_cast<std::size_t>(x % bound);
        }
    }

    /// Standard normal via Box-Muller.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[index(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace imbrisk
