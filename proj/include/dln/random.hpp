#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>

#include "dln/common.hpp"

namespace dln {

// splitmix64 step; used to derive independent stream seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Deterministic per-repetition stream seed: hash(master_seed, stream, attempt).
inline std::uint64_t derive_stream_seed(std::uint64_t master_seed, std::uint64_t stream,
                                        std::uint64_t attempt = 0) {
    std::uint64_t s = master_seed;
    std::uint64_t h = splitmix64(s);
    s ^= stream + 0x9e3779b97f4a7c15ull;
    h ^= splitmix64(s);
    s ^= (attempt + 1) * 0xda942042e4dd58b5ull;
    h ^= splitmix64(s);
    return h;
}

// mt19937_64 with an explicit Box-Muller Normal generator. The standard
// library's normal_distribution is implementation-defined, which would break
// the cross-platform byte-reproducibility the experiment harness promises.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // Uniform on (0,1]: 53-bit mantissa, never exactly 0.
    double uniform() { return (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53; }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // Correlated standard-Normal pair (z1, z2) with corr(z1,z2) = rho.
    std::pair<double, double> bivariate_normal(double rho) {
        const double a = normal();
        const double b = normal();
        return {a, rho * a + std::sqrt((1.0 - rho) * (1.0 + rho)) * b};
    }

    std::uint64_t raw() { return gen_(); }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace dln
