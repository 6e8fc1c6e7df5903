#include "pte/rng.hpp"

#include <cmath>

namespace pte {

namespace {

constexpr std::uint32_t kMult0 = 0xD2511F53u;
constexpr std::uint32_t kMult1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void round_once(Philox4x32::Counter& ctr, const Philox4x32::Key& key) {
  const std::uint64_t p0 = std::uint64_t(kMult0) * ctr[0];
  const std::uint64_t p1 = std::uint64_t(kMult1) * ctr[2];
  const Philox4x32::Counter out = {
      std::uint32_t(p1 >> 32) ^ ctr[1] ^ key[0],
      std::uint32_t(p1),
      std::uint32_t(p0 >> 32) ^ ctr[3] ^ key[1],
      std::uint32_t(p0),
  };
  ctr = out;
}

}  // namespace

Philox4x32::Counter Philox4x32::block(Counter ctr, Key key) {
  round_once(ctr, key);
  for (int r = 1; r < 10; ++r) {
    key[0] += kWeyl0;
    key[1] += kWeyl1;
    round_once(ctr, key);
  }
  return ctr;
}

RngStream::RngStream(std::uint64_t seed, StreamId stream, std::uint64_t replicate)
    : key_{std::uint32_t(seed), std::uint32_t(seed >> 32)},
      base_{0, static_cast<std::uint32_t>(stream), std::uint32_t(replicate),
            std::uint32_t(replicate >> 32)} {}

void RngStream::refill() {
  Philox4x32::Counter ctr = base_;
  ctr[0] = std::uint32_t(block_);
  buf_ = Philox4x32::block(ctr, key_);
  ++block_;
  pos_ = 0;
}

std::uint32_t RngStream::next_u32() {
  if (pos_ >= 4) refill();
  return buf_[pos_++];
}

std::uint64_t RngStream::next_u64() {
  const std::uint64_t lo = next_u32();
  const std::uint64_t hi = next_u32();
  return lo | (hi << 32);
}

double RngStream::uniform01() {
  return double(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  // u1 = 1 - uniform01() keeps the log argument strictly positive.
  const double u1 = 1.0 - uniform01();
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * M_PI * u2;
  spare_ = r * std::sin(theta);
  have_spare_ = true;
  return r * std::cos(theta);
}

std::uint64_t RngStream::uniform_below(std::uint64_t n) {
  const unsigned __int128 wide = static_cast<unsigned __int128>(next_u64()) * n;
  return static_cast<std::uint64_t>(wide >> 64);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  RngStream s(seed, StreamId::SeedDerive, index);
  return s.next_u64();
}

}  // namespace pte
