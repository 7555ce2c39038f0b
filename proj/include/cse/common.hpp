#pragma once

#include <cstdint>
#include <cstdio>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cse {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Spec'd error conditions get their own types so tests can tell them apart.
struct MalformedMatchError : Error { using Error::Error; };
struct EmptyCorpusError : Error { using Error::Error; };
struct TrainingDivergenceError : Error { using Error::Error; };
struct ShapeError : Error { using Error::Error; };
struct FormatError : Error { using Error::Error; };

// The literal blank token used in annotated contexts. Uppercase, so it can
// never collide with the lowercased corpus vocabulary.
inline constexpr std::string_view kPlaceholder = "PLACEHOLDER";

inline uint64_t fnv1a64(std::string_view s, uint64_t h = 1469598103934665603ull) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// All randomness in a run flows from one root seed; components derive their
// own stream by a fixed label so adding a consumer never shifts another's.
inline std::mt19937_64 rng_for(uint64_t root_seed, std::string_view label) {
    return std::mt19937_64(splitmix64(root_seed ^ fnv1a64(label)));
}

// Unbiased integer draw in [0, n); independent of libstdc++'s
// uniform_int_distribution so sequences are stable across toolchains.
inline uint64_t draw_below(std::mt19937_64& rng, uint64_t n) {
    if (n == 0) throw Error("draw_below: empty range");
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t v;
    do {
        v = rng();
    } while (v >= limit);
    return v % n;
}

inline double draw_unit(std::mt19937_64& rng) {
    return (rng() >> 11) * 0x1.0p-53;   // 53-bit mantissa in [0,1)
}

// Deterministic Fisher-Yates, again stable across standard libraries.
template <typename Vec>
void shuffle_indices(Vec& v, std::mt19937_64& rng) {
    for (size_t i = v.size(); i > 1; --i) {
        size_t j = static_cast<size_t>(draw_below(rng, i));
        std::swap(v[i - 1], v[j]);
    }
}

// Worker cap for the OpenMP kernels. CASE_THREADS caps it; deterministic
// mode forces the serial path.
int thread_count();
void set_deterministic(bool on);
bool deterministic();

inline std::string hash_hex(uint64_t h) {
    char buf[17];
    snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

}  // namespace cse
