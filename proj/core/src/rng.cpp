#include "selshare/rng.hpp"

#include <cmath>

namespace selshare {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t splitmix64(std::uint64_t& x) noexcept {
  std::uint64_t z = (x += kGolden);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t mix(std::uint64_t v) noexcept {
  std::uint64_t x = v;
  return splitmix64(x);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

// P(X <= k) for X ~ Poisson(1), k = 0..17; beyond that the tail is below 1e-16.
constexpr std::array<double, 18> kPoissonUnitCdf = [] {
  std::array<double, 18> cdf{};
  double term = 0.36787944117144233;  // e^-1
  double acc = 0.0;
  for (std::size_t k = 0; k < cdf.size(); ++k) {
    if (k > 0) term /= static_cast<double>(k);
    acc += term;
    cdf[k] = acc;
  }
  return cdf;
}();

}  // namespace

std::uint64_t stream_key(std::uint64_t domain, std::uint64_t index) noexcept {
  return mix(mix(domain) ^ (index + 0x632BE59BD9B4E019ULL));
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept
    : seed_(seed), stream_id_(stream_id) {
  std::uint64_t key = mix(seed ^ 0xD1B54A32D192ED03ULL) ^ mix(stream_id + kGolden);
  for (auto& s : state_) s = splitmix64(key);
  if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
}

RngStream::result_type RngStream::operator()() noexcept {
  const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double RngStream::uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

double RngStream::uniform_open() noexcept {
  return (static_cast<double>((*this)() >> 12) + 0.5) * 0x1.0p-52;
}

__extension__ using uint128 = unsigned __int128;

std::uint64_t RngStream::below(std::uint64_t n) noexcept {
  // Lemire's nearly-divisionless method.
  uint128 m = static_cast<uint128>((*this)()) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      m = static_cast<uint128>((*this)()) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double RngStream::normal() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

int RngStream::poisson_unit() noexcept {
  const double u = uniform();
  for (std::size_t k = 0; k < kPoissonUnitCdf.size(); ++k) {
    if (u < kPoissonUnitCdf[k]) return static_cast<int>(k);
  }
  return static_cast<int>(kPoissonUnitCdf.size());
}

RngStream RngStream::split(std::uint64_t sub) const noexcept {
  return RngStream(seed_, stream_key(stream_id_, sub));
}

}  // namespace selshare
