#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rwae/errors.hpp"

namespace rwae {

// Deterministic random stream. All distributions are implemented on top of
// the raw mt19937_64 output so sequences are identical across standard
// libraries and can be serialized for exact training resume.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // Uniform on (0, 1), never returns an endpoint; safe under log().
    double uniform_open() {
        return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller. Uses two raw draws per sample so the
    // generator carries no hidden cache state.
    double normal() {
        const double u1 = (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53; // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    // Gumbel(0, 1): -log(-log(u)).
    double gumbel() { return -std::log(-std::log(uniform_open())); }

    // Unbiased integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = eng_();
        } while (x >= limit);
        return x % n;
    }

    // In-place Fisher-Yates shuffle with a portable draw sequence.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

    std::string serialize() const {
        std::ostringstream os;
        os << eng_;
        return os.str();
    }

    static Rng deserialize(const std::string& blob) {
        Rng r(0);
        std::istringstream is(blob);
        is >> r.eng_;
        if (is.fail()) throw format_error("Rng::deserialize: bad state blob");
        return r;
    }

private:
    std::mt19937_64 eng_;
};

// splitmix64 step; used to derive independent per-item seeds from a base seed.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t item) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (item + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace rwae
