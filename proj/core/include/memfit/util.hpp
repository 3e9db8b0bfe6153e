#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace memfit {

/// Ceiling that absorbs floating-point noise: values within 1e-9 above an
/// integer are treated as that integer. Needed because products like
/// 0.2 * 10 evaluate to 2.0000000000000004 in binary floating point.
double guarded_ceil(double x);

/// 0-based index of the nearest-rank alpha-quantile in a sample of size n:
/// the ceil(alpha*n)-th order statistic, clamped to [1, n].
std::size_t nearest_rank_index(double alpha, std::size_t n);

/// Nearest-rank alpha-quantile: the ceil(alpha*n)-th smallest value.
/// Interpolation-free; the result is always a member of the sample.
double nearest_rank_quantile(std::vector<double> values, double alpha);

/// Conventional median: midpoint of the two middle order statistics for
/// even-sized samples.
double median(std::vector<double> values);

double mean(std::span<const double> values);

/// Population standard deviation (divides by n); 0 for a single value.
double population_stddev(std::span<const double> values);

/// Standard normal quantile function (inverse CDF). Acklam's rational
/// approximation refined with one Halley step against std::erfc; accurate
/// to ~1e-15 over (0, 1).
double normal_quantile(double p);

/// FNV-1a 64-bit hash.
std::uint64_t fnv1a64(std::string_view data);
std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed = 14695981039346656037ull);

/// 16-hex-digit lowercase rendering of a 64-bit hash.
std::string to_hex(std::uint64_t value);

/// SplitMix64 step, used to derive independent seeds.
std::uint64_t splitmix64(std::uint64_t& state);

/// Deterministic RNG wrapper around std::mt19937_64. All sampling is done
/// from raw engine output with fixed arithmetic so sequences are identical
/// across platforms and standard-library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform double in [0, 1).
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [lo, hi] inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

    /// Standard normal via Box-Muller on explicit uniform draws.
    double normal();

    /// Raw engine output.
    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

/// Sample k distinct indices from [0, n) without replacement, returned in
/// ascending order. Partial Fisher-Yates; consumes exactly k draws.
std::vector<std::size_t> sample_without_replacement(Rng& rng, std::size_t n, std::size_t k);

/// Compensated (Neumaier) summation.
double compensated_sum(std::span<const double> values);

} // namespace memfit
