#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace lab {

// mt19937_64 is bit-exact across standard libraries; the distributions are not,
// so the mappings to doubles are done here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : g_(seed) {}

    std::uint64_t next() { return g_(); }
    double uniform() { return static_cast<double>(g_() >> 11) * 0x1.0p-53; }
    double uniform(double a, double b) { return a + (b - a) * uniform(); }
    double normal() {
        double u1 = uniform(), u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }
    std::uint64_t below(std::uint64_t n) { return g_() % n; }

private:
    std::mt19937_64 g_;
};

}  // namespace lab
