#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace mmlab {

// All stochastic pieces draw from mt19937_64 with hand-rolled transforms.
// The raw generator output is pinned by the standard, so seeded sequences
// are reproducible across platforms; std:: distributions are not, which is
// why the transforms live here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next() { return eng_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform01() < p; }

    // Inclusive bounds, modulo reduction (bias negligible for our ranges).
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<std::int64_t>(next() % span);
    }

    // Standard normal via Box-Muller; consumes two draws per pair.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    // Number of failures before first success, p in (0, 1].
    std::int64_t geometric(double p) {
        if (p >= 1.0) return 0;
        double u = uniform01();
        while (u <= 0.0) u = uniform01();
        return static_cast<std::int64_t>(std::floor(std::log(u) / std::log(1.0 - p)));
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next() % i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace mmlab
