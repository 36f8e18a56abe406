#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace hedgebench::numcore {

/// Counter-based random stream (Philox4x32-10).
///
/// The key is the 64-bit seed; the 128-bit counter is (block index, stream_id).
/// Every variate is therefore a pure function of (seed, stream_id, counter),
/// which lets independent paths draw from independent streams without locks.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t counter = 0)
        : seed_(seed), stream_id_(stream_id), counter_(counter) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }
    /// Index of the next Philox block to be generated.
    std::uint64_t counter() const { return counter_; }

    std::uint64_t next_u64() {
        if (lane_ == 2) {
            refill();
        }
        return words_[lane_++];
    }

    /// Uniform on the open interval (0, 1) with 53 bits of resolution.
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n). Lemire's multiply-shift with rejection.
    std::uint64_t uniform_index(std::uint64_t n) {
        if (n == 0) {
            return 0;
        }
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            const std::uint64_t x = next_u64();
            const unsigned __int128 m = static_cast<unsigned __int128>(x) * n;
            if (static_cast<std::uint64_t>(m) >= threshold) {
                return static_cast<std::uint64_t>(m >> 64);
            }
        }
    }

    /// Standard normal variate via the Box-Muller transform.
    ///
    /// Each pair of uniforms (u1, u2) yields r*cos(2 pi u2) then r*sin(2 pi u2)
    /// with r = sqrt(-2 log u1). This transform is fixed for golden tests.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(angle);
        has_spare_ = true;
        return r * std::cos(angle);
    }

private:
    void refill() {
        std::array<std::uint32_t, 4> ctr = {
            static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
            static_cast<std::uint32_t>(stream_id_), static_cast<std::uint32_t>(stream_id_ >> 32)};
        std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed_),
                                            static_cast<std::uint32_t>(seed_ >> 32)};
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        words_[0] = (static_cast<std::uint64_t>(ctr[1]) << 32) | ctr[0];
        words_[1] = (static_cast<std::uint64_t>(ctr[3]) << 32) | ctr[2];
        lane_ = 0;
        ++counter_;
    }

    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t counter_;
    std::array<std::uint64_t, 2> words_{};
    int lane_ = 2;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// n standard normal variates drawn from `stream`.
template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> gaussian(RngStream& stream, Eigen::Index n) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        out(i) = static_cast<Scalar>(stream.normal());
    }
    return out;
}

}  // namespace hedgebench::numcore
