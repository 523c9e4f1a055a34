#pragma once

// Counter-based Philox4x32-10 streams. A stream is addressed by the run seed
// and a tuple (kind, chain, sweep, index), so every site/edge update draws
// from its own stream and results never depend on update order or threads.

#include <array>
#include <cstdint>

namespace soslab {

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key);

enum class StreamKind : std::uint32_t {
  heatbath = 1,
  tau_update = 2,
  gaussian = 3,
  init = 4,
  test = 5,
  analysis = 6,
};

struct StreamId {
  StreamKind kind = StreamKind::test;
  std::uint64_t chain = 0;
  std::uint64_t sweep = 0;
  std::uint64_t index = 0;
};

class RngStream {
 public:
  RngStream(std::uint64_t seed, const StreamId& id);
  RngStream(std::uint64_t seed, std::uint64_t stream);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  // Uniform on the open interval (0, 1) with 53 random bits.
  double uniform();
  double normal();
  double exponential();
  // Gamma(shape 1/2, rate 1), i.e. N²/2.
  double gamma_half();
  std::uint64_t below(std::uint64_t n);

 private:
  void refill();

  std::array<std::uint32_t, 2> key_{};
  std::array<std::uint32_t, 4> ctr_{};
  std::array<std::uint32_t, 4> buf_{};
  int pos_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t mix64(std::uint64_t x);

}  // namespace soslab
