#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace coseg {

namespace detail {

inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<uint64_t>(static_cast<unsigned char>(c));
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline uint64_t mix64(uint64_t a, uint64_t b) {
    uint64_t s = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
    return splitmix64(s);
}

// Natural log built from basic IEEE operations only, so draws that depend on
// it are bit-identical across libm implementations. Relative error ~1 ulp.
inline double det_log(double x) {
    if (x <= 0.0) throw std::domain_error("det_log: x must be positive");
    int e = 0;
    double m = std::frexp(x, &e);  // x = m * 2^e, m in [0.5, 1)
    constexpr double kSqrtHalf = 0.70710678118654752440;
    if (m < kSqrtHalf) {
        m *= 2.0;
        e -= 1;
    }
    // ln m = 2 atanh(z), z = (m-1)/(m+1), |z| <= 0.1716
    const double z = (m - 1.0) / (m + 1.0);
    const double z2 = z * z;
    double term = z;
    double sum = 0.0;
    for (int k = 0; k < 13; ++k) {
        sum += term / static_cast<double>(2 * k + 1);
        term *= z2;
    }
    constexpr double kLn2 = 0.69314718055994530942;
    return 2.0 * sum + static_cast<double>(e) * kLn2;
}

// Acklam's rational approximation to the standard normal inverse CDF
// (|relative error| < 1.2e-9), evaluated with det_log/sqrt only.
inline double inv_normal_cdf(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;
    constexpr double p_high = 1.0 - p_low;
    if (p <= 0.0 || p >= 1.0) throw std::domain_error("inv_normal_cdf: p must be in (0,1)");
    if (p < p_low) {
        double q = std::sqrt(-2.0 * det_log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > p_high) {
        double q = std::sqrt(-2.0 * det_log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    double q = p - 0.5;
    double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace detail

// Named deterministic random stream. Identical (seed, stream-id, call
// sequence) yields identical draws on any IEEE-754 platform: the core
// generator is integer-only (xoshiro256++) and the uniform/normal
// conversions avoid libm transcendentals.
//
// Single-owner by convention: never share one stream across threads; use
// derive() to split independent child streams instead.
class RngStream {
public:
    RngStream(uint64_t seed, std::string_view stream_id)
        : seed_(seed), id_(stream_id), id_hash_(detail::fnv1a64(stream_id)) {
        reset_state();
    }

    // Child stream independent of this stream's draw position.
    RngStream derive(uint64_t child) const {
        RngStream out(*this);
        out.id_hash_ = detail::mix64(id_hash_, child);
        out.id_ += "/" + std::to_string(child);
        out.reset_state();
        return out;
    }

    RngStream derive(std::string_view child) const {
        RngStream out(*this);
        out.id_hash_ = detail::mix64(id_hash_, detail::fnv1a64(child));
        out.id_ += "/";
        out.id_ += child;
        out.reset_state();
        return out;
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // [0,1) with 53 random bits
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // [0,n) unbiased
    int uniform_int(int n) {
        if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
        const uint64_t un = static_cast<uint64_t>(n);
        const uint64_t bound = UINT64_MAX - UINT64_MAX % un;
        uint64_t x = next_u64();
        while (x >= bound) x = next_u64();
        return static_cast<int>(x % un);
    }

    double normal() {
        double u = uniform01();
        while (u <= 0.0) u = uniform01();
        return detail::inv_normal_cdf(u);
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

    bool bernoulli(double p) { return uniform01() < p; }

    uint64_t seed() const { return seed_; }
    const std::string& stream_id() const { return id_; }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    void reset_state() {
        uint64_t sm = seed_ ^ detail::mix64(id_hash_, 0x5851f42d4c957f2dULL);
        for (auto& w : s_) w = detail::splitmix64(sm);
        if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
    }

    uint64_t seed_ = 0;
    std::string id_;
    uint64_t id_hash_ = 0;
    std::array<uint64_t, 4> s_{};
};

}  // namespace coseg
