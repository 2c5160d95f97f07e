// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "nqs/errors.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <random>
#include <ranges>
#include <span>
#include <string>
#include <vector>

namespace nqs {

inline constexpr int kDefaultMaxSpins = 24;
inline constexpr int kHardMaxSpins    = 26;

namespace detail {
inline std::atomic<int> &spin_cap_slot() {
    static std::atomic<int> cap{[] {
        if(const char *env = std::getenv("NQS_MAX_N")) {
            int v = std::atoi(env);
            if(v >= 1 && v <= kHardMaxSpins) return v;
        }
        return kDefaultMaxSpins;
    }()};
    return cap;
}
} // namespace detail

/// Largest spin count accepted by dense routines (24 unless raised, never above 26).
[[nodiscard]] inline int spin_cap() { return detail::spin_cap_slot().load(); }

inline void set_spin_cap(int cap) {
    require(cap >= 1 && cap <= kHardMaxSpins, Errc::capacity,
            "spin cap must lie in [1, " + std::to_string(kHardMaxSpins) + "], got " + std::to_string(cap));
    detail::spin_cap_slot().store(cap);
}

inline void check_spin_count(int n) {
    require(n >= 1 && n <= spin_cap(), Errc::capacity,
            "spin count " + std::to_string(n) + " outside [1, " + std::to_string(spin_cap()) + "]");
}

[[nodiscard]] constexpr std::uint64_t low_mask(int n) noexcept { return n >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1; }

/// n spins packed into an integer; bit i set means s_i = +1, clear means s_i = -1.
struct SpinConfig {
    std::uint64_t bits = 0;
    int           n    = 0;

    [[nodiscard]] constexpr int    spin(int i) const noexcept { return ((bits >> i) & 1u) ? 1 : -1; }
    [[nodiscard]] constexpr double value(int i) const noexcept { return static_cast<double>(spin(i)); }

    [[nodiscard]] std::vector<double> values() const {
        std::vector<double> s(static_cast<std::size_t>(n));
        for(int i = 0; i < n; ++i) s[static_cast<std::size_t>(i)] = value(i);
        return s;
    }
    friend constexpr bool operator==(const SpinConfig &, const SpinConfig &) = default;
};

/// All 2^n configurations in ascending bit order.
[[nodiscard]] inline auto enumerate_configs(int n) {
    check_spin_count(n);
    return std::views::iota(std::uint64_t{0}, std::uint64_t{1} << n)
         | std::views::transform([n](std::uint64_t b) { return SpinConfig{b, n}; });
}

/// Subset A of the n spins, stored as a bit mask.
struct Subregion {
    std::uint64_t mask = 0;
    int           n    = 0;

    Subregion() = default;
    Subregion(std::uint64_t mask_, int n_) : mask(mask_), n(n_) {
        require(n_ >= 1 && n_ <= 63, Errc::contract, "subregion spin count out of range");
        require((mask_ & ~low_mask(n_)) == 0, Errc::contract, "subregion mask has bits beyond n");
    }

    static Subregion from_indices(std::span<const int> indices, int n) {
        std::uint64_t m = 0;
        for(int i : indices) {
            require(i >= 0 && i < n, Errc::contract, "subregion index " + std::to_string(i) + " out of range");
            m |= std::uint64_t{1} << i;
        }
        return {m, n};
    }

    /// {start, start+1, ..., start+len-1} modulo n.
    static Subregion contiguous(int start, int len, int n) {
        require(len >= 0 && len <= n, Errc::contract, "window length out of range");
        std::uint64_t m = 0;
        for(int j = 0; j < len; ++j) m |= std::uint64_t{1} << ((start + j) % n);
        return {m, n};
    }

    [[nodiscard]] int       size() const noexcept { return std::popcount(mask); }
    [[nodiscard]] bool      contains(int i) const noexcept { return (mask >> i) & 1u; }
    [[nodiscard]] Subregion complement() const { return {~mask & low_mask(n), n}; }

    [[nodiscard]] std::vector<int> indices() const {
        std::vector<int> out;
        for(int i = 0; i < n; ++i)
            if(contains(i)) out.push_back(i);
        return out;
    }
    friend bool operator==(const Subregion &, const Subregion &) = default;
};

/// Scalar t(s) = sum_i w_i s_i + b.
struct AffineFeature {
    std::vector<double> weights;
    double              bias = 0.0;

    [[nodiscard]] int n() const noexcept { return static_cast<int>(weights.size()); }

    [[nodiscard]] double evaluate(const SpinConfig &s) const {
        double acc = 0.0;
        for(int i = 0; i < n(); ++i) acc += weights[static_cast<std::size_t>(i)] * s.value(i);
        return acc + bias;
    }

    [[nodiscard]] double evaluate(std::span<const double> s) const {
        double acc = 0.0;
        for(std::size_t i = 0; i < weights.size(); ++i) acc += weights[i] * s[i];
        return acc + bias;
    }
};

/// max_s |t(s)| over the hypercube; attained at s_i = sign(w_i) sign(b).
[[nodiscard]] inline double feature_supnorm(const AffineFeature &f) {
    double acc = std::abs(f.bias);
    for(double w : f.weights) acc += std::abs(w);
    return acc;
}

/// t(s) = x(u) + y(v) with x supported on A and y on the complement; the bias is
/// shared equally.
struct SplitFeature {
    AffineFeature x_part;
    AffineFeature y_part;

    [[nodiscard]] double evaluate(const SpinConfig &s) const { return x_part.evaluate(s) + y_part.evaluate(s); }
};

[[nodiscard]] inline SplitFeature split_feature(const AffineFeature &f, const Subregion &region) {
    require(f.n() == region.n, Errc::contract,
            "feature has " + std::to_string(f.n()) + " weights but the subregion spans " + std::to_string(region.n) + " spins");
    SplitFeature out;
    out.x_part.weights.assign(f.weights.size(), 0.0);
    out.y_part.weights.assign(f.weights.size(), 0.0);
    for(int i = 0; i < f.n(); ++i) {
        auto &dst = region.contains(i) ? out.x_part.weights : out.y_part.weights;
        dst[static_cast<std::size_t>(i)] = f.weights[static_cast<std::size_t>(i)];
    }
    out.x_part.bias = f.bias / 2.0;
    out.y_part.bias = f.bias / 2.0;
    return out;
}

/// Splittable random stream: (seed, stream_id) fully determines the draws, so
/// work items seeded by trial or node index reproduce under any scheduling.
class RngStream {
  public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_id_(stream_id), engine_(mix(seed, stream_id)) {}

    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] std::uint64_t stream_id() const noexcept { return stream_id_; }

    double normal(double mean, double stddev) {
        if(stddev == 0.0) return mean;
        return std::normal_distribution<double>(mean, stddev)(engine_);
    }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
    std::uint64_t uniform_index(std::uint64_t count) {
        return std::uniform_int_distribution<std::uint64_t>(0, count - 1)(engine_);
    }
    std::uint64_t next_u64() { return engine_(); }
    std::mt19937_64 &engine() noexcept { return engine_; }

    /// Child stream whose id is derived from this stream's id and a tag.
    [[nodiscard]] RngStream child(std::uint64_t tag) const { return {seed_, splitmix64(stream_id_ ^ splitmix64(tag + 0x632be59bd9b4e019ULL))}; }

    static constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

  private:
    static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) { return splitmix64(seed ^ splitmix64(stream ^ 0xd1b54a32d192ed03ULL)); }

    std::uint64_t   seed_;
    std::uint64_t   stream_id_;
    std::mt19937_64 engine_;
};

/// Stable 64-bit id from a list of integers (trial index, node id, ...).
[[nodiscard]] inline std::uint64_t stream_key(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = 0x243f6a8885a308d3ULL;
    for(auto p : parts) h = RngStream::splitmix64(h ^ RngStream::splitmix64(p));
    return h;
}

[[nodiscard]] inline std::string mask_to_hex(std::uint64_t mask) {
    static constexpr char digits[] = "0123456789abcdef";
    if(mask == 0) return "0x0";
    std::string out;
    while(mask) {
        out.insert(out.begin(), digits[mask & 0xf]);
        mask >>= 4;
    }
    return "0x" + out;
}

[[nodiscard]] inline std::uint64_t parse_mask_hex(std::string_view text) {
    if(text.starts_with("0x") || text.starts_with("0X")) text.remove_prefix(2);
    require(!text.empty() && text.size() <= 16, Errc::parse, "region mask must be 1-16 hex digits");
    std::uint64_t v = 0;
    for(char c : text) {
        int d = -1;
        if(c >= '0' && c <= '9') d = c - '0';
        else if(c >= 'a' && c <= 'f') d = c - 'a' + 10;
        else if(c >= 'A' && c <= 'F') d = c - 'A' + 10;
        require(d >= 0, Errc::parse, "invalid hex digit in region mask");
        v = (v << 4) | static_cast<std::uint64_t>(d);
    }
    return v;
}

} // namespace nqs
