#include "vfp/random.hpp"

#include <cmath>
#include <numbers>

namespace vfp {

double Rng::exponential() {
    // 1 - u lies in (0, 1], so the log is finite.
    return -std::log1p(-uniform());
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

}  // namespace vfp
