#pragma once

#include <cmath>
#include <cstdint>

#include "impedancemetry/units.hpp"

namespace impedancemetry {

// splitmix64 step; the generator state advances by the golden-ratio increment.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Child seed for experiment point `index` under a master seed. Every
// concurrently evaluated point gets an independent stream, so results do not
// depend on scheduling order.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t s = master ^ (0xd1342543de82ef95ULL * (index + 1));
    splitmix64(s);
    splitmix64(s);
    return s;
}

// Deterministic gaussian stream (Box-Muller on splitmix64 uniforms). Output is
// bit-identical across platforms and parallelism levels for a given seed.
class GaussianStream {
  public:
    explicit GaussianStream(std::uint64_t seed) : state_(seed) {}

    // uniform in (0, 1)
    double uniform() {
        return static_cast<double>(splitmix64(state_) >> 11) * 0x1.0p-53 + 0x1.0p-54;
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * kPi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

  private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace impedancemetry
