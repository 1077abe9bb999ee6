#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace dexperts {

// Roles for deriving independent sub-streams. Every random draw in a
// simulation comes from a stream keyed by (seed, trial, day, role, entity),
// so generators, protocol sampling and server-side draws never interleave.
enum class Role : std::uint64_t {
    Generator = 1,       // cost-stream draws
    Server = 2,          // per-server protocol draws (alpha/beta, E_j)
    Sampling = 3,        // coordinator expert sampling (B_e, probes)
    Permutation = 4,     // server visit order
    Selection = 5,       // realized expert pick from p_t
    Exploration = 6,     // exp3 exploration mixing
    Meta = 7,            // meta-expert choice k
    ChildSelection = 8,  // a meta child's own daily pick
    DiffDist = 9         // case draw and stream wiring for the reduction
};

// Counter-less splittable stream: a xoshiro256++ generator whose state is a
// hash of the derivation tuple. Identical tuples give byte-identical draw
// sequences on every platform; distinct tuples give unrelated sequences.
class RngStream {
public:
    explicit RngStream(const std::array<std::uint64_t, 4>& state) : s_(state) {}

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0, 1) with 53 bits of mantissa.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    // Uniform integer in [0, bound). bound must be >= 1.
    std::uint64_t below(std::uint64_t bound) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
    }

    double normal(double mu = 0.0, double sigma = 1.0) {
        if (have_spare_) {
            have_spare_ = false;
            return mu + sigma * spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return mu + sigma * r * std::cos(theta);
    }

    // Exponential(1).
    double exponential() { return -std::log1p(-uniform()); }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::array<std::uint64_t, 4> s_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}
}  // namespace detail

inline RngStream derive_stream(std::uint64_t seed, std::uint64_t trial, std::uint64_t day,
                               Role role, std::uint64_t entity) {
    std::uint64_t h = seed;
    std::uint64_t acc = detail::splitmix64(h);
    h ^= trial * 0xA24BAED4963EE407ULL;
    acc ^= detail::splitmix64(h);
    h ^= day * 0x9FB21C651E98DF25ULL;
    acc ^= detail::splitmix64(h);
    h ^= static_cast<std::uint64_t>(role) * 0xD6E8FEB86659FD93ULL;
    acc ^= detail::splitmix64(h);
    h ^= entity * 0xC2B2AE3D27D4EB4FULL;
    acc ^= detail::splitmix64(h);
    std::array<std::uint64_t, 4> state{};
    for (auto& w : state) w = detail::splitmix64(acc);
    return RngStream(state);
}

}  // namespace dexperts
