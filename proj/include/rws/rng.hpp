#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace rws {

// Counter-based PRNG core: Philox4x32 with 10 rounds.
//
// The generator is a pure function (key, counter) -> 4x32 random words, so
// independent substreams are carved out of the 128-bit counter space instead
// of by jumping a sequential state. That is what makes per-(level, path)
// sources reproducible no matter how work is scheduled across threads.
class Philox4x32 {
 public:
  Philox4x32(std::uint64_t key, std::uint32_t ctr1, std::uint32_t ctr2,
             std::uint32_t ctr3)
      : key0_(static_cast<std::uint32_t>(key)),
        key1_(static_cast<std::uint32_t>(key >> 32)),
        ctr1_(ctr1),
        ctr2_(ctr2),
        ctr3_(ctr3) {}

  // Random block for the given position of the running 32-bit counter word.
  std::array<std::uint32_t, 4> block(std::uint32_t counter) const {
    std::uint32_t x0 = counter, x1 = ctr1_, x2 = ctr2_, x3 = ctr3_;
    std::uint32_t k0 = key0_, k1 = key1_;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = kMul0 * static_cast<std::uint64_t>(x0);
      const std::uint64_t p1 = kMul1 * static_cast<std::uint64_t>(x2);
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      x0 = hi1 ^ x1 ^ k0;
      x1 = lo1;
      x2 = hi0 ^ x3 ^ k1;
      x3 = lo0;
      k0 += kWeyl0;
      k1 += kWeyl1;
    }
    return {x0, x1, x2, x3};
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  std::uint32_t key0_, key1_;
  std::uint32_t ctr1_, ctr2_, ctr3_;
};

// Consumer tag baked into the counter so that distinct uses of the same
// (seed, level, path) triple never overlap.
enum class StreamPurpose : std::uint32_t {
  kSkeleton = 1,  // skeleton simulation: duration + sign draws
  kNested = 2,    // nested inner Monte Carlo of generic functionals
  kGrid = 3,      // fine-grid Brownian paths
  kDraws = 4,     // raw exit-time draws (sampler diagnostics)
};

// Stream of uniforms/normals for one logical consumer.
//
// Derivation contract (stable across releases; part of the reproducibility
// guarantee):
//   key     = master seed (64-bit)
//   counter = (block, substream, lo32(stream), purpose << 24 | level)
// where `stream` is the path index (or chunk index for pooled draws) and
// `substream` is the node index of a nested estimator, 0 otherwise.
//
// Draw discipline: next_uniform() consumes exactly one uniform (two 32-bit
// words); next_normal() consumes two uniforms per Box-Muller pair, caching
// the spare; next_sign() consumes one uniform.
class UniformSource {
 public:
  UniformSource(std::uint64_t master_seed, StreamPurpose purpose,
                std::uint32_t level, std::uint64_t stream,
                std::uint32_t substream = 0)
      : engine_(master_seed, substream,
                static_cast<std::uint32_t>(stream),
                (static_cast<std::uint32_t>(purpose) << 24) |
                    (level & 0x00FFFFFFu)) {
    if (level > 0x00FFFFFFu)
      throw std::invalid_argument("UniformSource: level exceeds 24-bit field");
    if (stream > 0xFFFFFFFFull)
      throw std::invalid_argument(
          "UniformSource: stream index exceeds 32-bit field");
  }

  // Uniform on the open interval (0,1), 53 significant bits.
  double next_uniform() {
    const std::uint32_t hi = next_word();
    const std::uint32_t lo = next_word();
    const std::uint64_t m =
        (static_cast<std::uint64_t>(hi) << 21) | (lo >> 11);
    ++uniforms_;
    return (static_cast<double>(m) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; pairs are generated together and the
  // second value cached, so consumption stays deterministic.
  double next_normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  int next_sign() { return next_uniform() < 0.5 ? -1 : +1; }

  std::uint64_t uniforms_consumed() const { return uniforms_; }

 private:
  std::uint32_t next_word() {
    if (pos_ == 4) {
      if (block_ == 0xFFFFFFFFu)
        throw std::runtime_error("UniformSource: block counter exhausted");
      ++block_;
      pos_ = 0;
    }
    if (pos_ == 0) buffer_ = engine_.block(block_);
    return buffer_[pos_++];
  }

  Philox4x32 engine_;
  std::array<std::uint32_t, 4> buffer_{};
  std::uint32_t block_ = 0;
  int pos_ = 0;  // forces a fill on first use of block 0
  bool has_spare_ = false;
  double spare_ = 0.0;
  std::uint64_t uniforms_ = 0;
};

}  // namespace rws
