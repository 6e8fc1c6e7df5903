#pragma once

#include <array>
#include <cstdint>

namespace pte {

// Philox4x32-10 counter-based generator. Each 128-bit counter maps to four
// independent 32-bit outputs, so draws are addressable: the same
// (seed, stream, replicate, block) always yields the same value regardless
// of what was drawn before. That is what makes simulation replicates and
// bootstrap resamples reproducible under any parallel schedule.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key);
};

// Logical substreams. Keeping surrogate / noise / missingness draws on
// separate streams means masking a trial consumes no randomness from the
// streams that generated it, so the fully observed data is identical with
// and without masking.
enum class StreamId : std::uint32_t {
  Surrogate = 1,
  Noise = 2,
  Missingness = 3,
  Bootstrap = 4,
  SeedDerive = 5,
};

// Sequential view over one (seed, stream, replicate) lane of the generator.
class RngStream {
 public:
  RngStream(std::uint64_t seed, StreamId stream, std::uint64_t replicate = 0);

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53 random bits.
  double uniform01();

  // Standard normal via Box-Muller; draws are consumed in pairs.
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }

  bool bernoulli(double p) { return uniform01() < p; }

  // Uniform integer on [0, n), n >= 1. Multiply-shift; no rejection loop,
  // so every draw consumes exactly one 64-bit value.
  std::uint64_t uniform_below(std::uint64_t n);

 private:
  void refill();

  Philox4x32::Key key_;
  Philox4x32::Counter base_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int pos_ = 4;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Stable 64-bit seed for a child task (e.g. per-replicate bootstrap seeds),
// derived through the SeedDerive stream so child draws never collide with
// the parent's own streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace pte
