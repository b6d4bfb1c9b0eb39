#pragma once

// Counter-based random streams. Every draw is a pure function of
// (key, stream id, draw index), so a stream for any site can be regenerated
// on demand without replaying other sites.

#include <array>
#include <cstdint>

namespace jumpex {

/// Philox4x32-10 block function (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Independent purposes that draw from the same master seed.
enum class StreamDomain : std::uint64_t {
  Clocks = 0x636c6f636b73ULL,
  Configuration = 0x636f6e666967ULL,
  Test = 0x74657374ULL,
};

/// Master seed plus replica number; the pair selects a family of streams.
struct StreamSeed {
  std::uint64_t master = 0;
  std::uint64_t replica = 0;

  friend bool operator==(const StreamSeed&, const StreamSeed&) = default;
};

std::uint64_t derive_key(StreamSeed seed, StreamDomain domain) noexcept;

/// Sequential reader over one counter-based stream.
class CounterStream {
 public:
  CounterStream(std::uint64_t key, std::uint64_t stream_id) noexcept;
  CounterStream(StreamSeed seed, StreamDomain domain, std::uint64_t stream_id) noexcept
      : CounterStream(derive_key(seed, domain), stream_id) {}

  std::uint64_t next_u64() noexcept;
  /// Uniform on the open interval (0, 1); never returns 0 or 1.
  double next_open01() noexcept;

 private:
  void refill() noexcept;

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
};

}  // namespace jumpex
