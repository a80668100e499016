#ifndef LIGHTPIPE_PHILOX_HPP
#define LIGHTPIPE_PHILOX_HPP

// Philox4x32-10 counter-based generator (Salmon et al., SC'11) and the
// substream scheme used by every sampler in this project.
//
// Streams are keyed by the 64-bit experiment seed and indexed by a 64-bit
// stream id (in practice the global trajectory index, or a chunk index for
// plain sampling loops). The counter layout is
//     ctr = (block_lo, block_hi, stream_lo, stream_hi),  key = seed
// so draws depend only on (seed, stream, position). Workers never share
// streams and results are independent of how trajectories are scheduled,
// which is what makes output files byte-identical for any worker count.

#include <cstdint>
#include <cmath>

namespace lightpipe {

struct philox4x32 {
    // one 4x32 block; verified against Random123 known-answer vectors
    static inline void block(const std::uint32_t ctr[4], const std::uint32_t key[2],
                             std::uint32_t out[4]) {
        constexpr std::uint32_t m0 = 0xD2511F53u, m1 = 0xCD9E8D57u;
        constexpr std::uint32_t b0 = 0x9E3779B9u, b1 = 0xBB67AE85u;
        std::uint32_t c0 = ctr[0], c1 = ctr[1], c2 = ctr[2], c3 = ctr[3];
        std::uint32_t k0 = key[0], k1 = key[1];
        for (int r = 0; r < 10; ++r) {
            std::uint64_t p0 = static_cast<std::uint64_t>(m0) * c0;
            std::uint64_t p1 = static_cast<std::uint64_t>(m1) * c2;
            std::uint32_t n0 = static_cast<std::uint32_t>(p1 >> 32) ^ c1 ^ k0;
            std::uint32_t n1 = static_cast<std::uint32_t>(p1);
            std::uint32_t n2 = static_cast<std::uint32_t>(p0 >> 32) ^ c3 ^ k1;
            std::uint32_t n3 = static_cast<std::uint32_t>(p0);
            c0 = n0; c1 = n1; c2 = n2; c3 = n3;
            k0 += b0; k1 += b1;
        }
        out[0] = c0; out[1] = c1; out[2] = c2; out[3] = c3;
    }
};

class rng_stream {
  public:
    rng_stream(std::uint64_t seed, std::uint64_t stream)
        : have_spare_(false), idx_(2), block_(0) {
        key_[0] = static_cast<std::uint32_t>(seed);
        key_[1] = static_cast<std::uint32_t>(seed >> 32);
        stream_[0] = static_cast<std::uint32_t>(stream);
        stream_[1] = static_cast<std::uint32_t>(stream >> 32);
    }

    std::uint64_t next_u64() {
        if (idx_ >= 2) refill();
        return buf_[idx_++];
    }

    // uniform on the open interval (0,1): (r53 + 1/2) * 2^-53
    double u01() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1p-53;
    }

    // uniform on the open interval (-1,1); never returns the endpoints
    double upm1() { return 2.0 * u01() - 1.0; }

    // standard normal, Box-Muller with a cached spare
    double normal() {
        if (have_spare_) { have_spare_ = false; return spare_; }
        double u1 = u01(), u2 = u01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

  private:
    void refill() {
        std::uint32_t ctr[4] = {
            static_cast<std::uint32_t>(block_),
            static_cast<std::uint32_t>(block_ >> 32),
            stream_[0], stream_[1]
        };
        std::uint32_t out[4];
        philox4x32::block(ctr, key_, out);
        buf_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
        buf_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
        ++block_;
        idx_ = 0;
    }

    std::uint32_t key_[2];
    std::uint32_t stream_[2];
    bool have_spare_;
    double spare_ = 0.0;
    int idx_;
    std::uint64_t block_;
    std::uint64_t buf_[2] = {0, 0};
};

}

#endif
