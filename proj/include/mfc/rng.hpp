#pragma once

#include <cmath>
#include <cstdint>
#include <utility>

namespace mfc {

namespace detail {

constexpr std::uint64_t mix64(std::uint64_t z)
{
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

} // namespace detail

/// Keyed splitmix64 stream. Every stream is fully determined by
/// (seed, domain, a, b), so draws never depend on thread scheduling.
class CounterRng {
public:
    enum Domain : std::uint64_t { Init = 1, Permute = 2, Pair = 3, Round = 4, Adjoint = 5, Test = 6 };

    CounterRng(std::uint64_t seed, std::uint64_t domain, std::uint64_t a = 0, std::uint64_t b = 0)
        : state_(derive(key(seed, domain, a), b))
    {
    }

    /// Hash of the first three key words; pair with from_key() to open many streams cheaply.
    static constexpr std::uint64_t key(std::uint64_t seed, std::uint64_t domain, std::uint64_t a)
    {
        std::uint64_t h = detail::mix64(seed + detail::kGolden);
        h = detail::mix64((h ^ domain) + detail::kGolden);
        return detail::mix64((h ^ a) + detail::kGolden);
    }
    /// Same stream as CounterRng(seed, domain, a, b) when k == key(seed, domain, a).
    static CounterRng from_key(std::uint64_t k, std::uint64_t b) { return CounterRng(derive(k, b)); }

    std::uint64_t next_u64()
    {
        state_ += detail::kGolden;
        return detail::mix64(state_);
    }
    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
    /// Uniform integer on [0, n), unbiased.
    std::uint64_t below(std::uint64_t n)
    {
        // Lemire's multiply-and-reject.
        unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n) {
            const std::uint64_t threshold = -n % n;
            while (low < threshold) {
                m = static_cast<unsigned __int128>(next_u64()) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }
    /// Two independent standard normals (Marsaglia polar method).
    std::pair<double, double> normal_pair()
    {
        for (;;) {
            const std::uint64_t r = next_u64();
            // Two 32-bit halves mapped to (-1, 1).
            const double u = (static_cast<double>(r >> 32) + 0.5) * 0x1.0p-31 - 1.0;
            const double v = (static_cast<double>(r & 0xffffffffull) + 0.5) * 0x1.0p-31 - 1.0;
            const double s = u * u + v * v;
            if (s < 1.0 && s > 0.0) {
                const double f = std::sqrt(-2.0 * std::log(s) / s);
                return {u * f, v * f};
            }
        }
    }

private:
    explicit CounterRng(std::uint64_t state) : state_(state) {}
    static constexpr std::uint64_t derive(std::uint64_t k, std::uint64_t b) { return detail::mix64((k ^ b) + detail::kGolden); }

    std::uint64_t state_;
};

/// x + 1 with probability frac(x), otherwise floor(x). Throws NumericalError for x < 0.
std::int64_t iround(double x, CounterRng& rng);

} // namespace mfc
