#include "jumpex/rng.hpp"

namespace jumpex {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  lo = static_cast<std::uint32_t>(p);
  hi = static_cast<std::uint32_t>(p >> 32);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> c,
                                        std::array<std::uint32_t, 2> k) noexcept {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      k[0] += kWeyl0;
      k[1] += kWeyl1;
    }
    std::uint32_t lo0, hi0, lo1, hi1;
    mulhilo(kMul0, c[0], lo0, hi0);
    mulhilo(kMul1, c[2], lo1, hi1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
  return c;
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_key(StreamSeed seed, StreamDomain domain) noexcept {
  std::uint64_t h = splitmix64(seed.master);
  h = splitmix64(h ^ seed.replica);
  return splitmix64(h ^ static_cast<std::uint64_t>(domain));
}

CounterStream::CounterStream(std::uint64_t key, std::uint64_t stream_id) noexcept
    : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)},
      stream_id_(stream_id) {}

void CounterStream::refill() noexcept {
  buffer_ = philox4x32({static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                        static_cast<std::uint32_t>(stream_id_),
                        static_cast<std::uint32_t>(stream_id_ >> 32)},
                       key_);
  ++block_;
  used_ = 0;
}

std::uint64_t CounterStream::next_u64() noexcept {
  if (used_ > 2) refill();
  const std::uint64_t v = static_cast<std::uint64_t>(buffer_[used_]) |
                          (static_cast<std::uint64_t>(buffer_[used_ + 1]) << 32);
  used_ += 2;
  return v;
}

double CounterStream::next_open01() noexcept {
  // 53 random bits centred in their cell: (m + 0.5) / 2^53.
  const std::uint64_t m = next_u64() >> 11;
  return (static_cast<double>(m) + 0.5) * 0x1.0p-53;
}

}  // namespace jumpex
