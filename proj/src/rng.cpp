#include "mfc/rng.hpp"

#include "mfc/error.hpp"

#include <cmath>

namespace mfc {

std::int64_t iround(double x, CounterRng& rng)
{
    if (!(x >= 0.0)) throw NumericalError("iround: argument must be nonnegative");
    const double f = std::floor(x);
    const auto base = static_cast<std::int64_t>(f);
    return rng.uniform() < x - f ? base + 1 : base;
}

} // namespace mfc
