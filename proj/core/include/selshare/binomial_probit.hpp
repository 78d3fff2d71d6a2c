#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

namespace selshare {

/// log C(n, a).
double log_binomial_coefficient(std::uint32_t n, std::uint32_t a);

/// log Binomial(a | n, Phi(u)), coefficient included.
double log_binomial_probit(std::uint32_t n, std::uint32_t a, double u);

/// log of the integral over nu ~ N(0, 1) of Binomial(a | n, Phi(x + nu)):
/// the probability of a adoptions among n exposed peers who share a
/// record-level utility shock, evaluated directly by adaptive trapezoid.
double log_binomial_probit_marginal(std::uint32_t n, std::uint32_t a, double x);

/// Tabulated log_binomial_probit_marginal for a fixed set of (n, a) pairs on a
/// uniform x grid, evaluated by cubic Hermite interpolation. Building the table
/// is a discrete convolution of the binomial factor with the normal density on
/// a shared grid; lookups cost one cubic. Arguments outside the grid, and grid
/// points where the convolution underflows, fall back to direct evaluation.
/// Immutable after construction and safe for concurrent lookups.
class BinomialProbitTable {
 public:
  struct Options {
    double x_min = -8.0;
    double x_max = 4.0;
    double step = 0.025;
  };

  using Pair = std::pair<std::uint32_t, std::uint32_t>;  // (n, a)

  explicit BinomialProbitTable(std::span<const Pair> pairs) : BinomialProbitTable(pairs, Options{}) {}
  BinomialProbitTable(std::span<const Pair> pairs, Options options);

  /// Slot of (n, a), or -1 when the pair was not tabulated.
  int index_of(std::uint32_t n, std::uint32_t a) const noexcept;
  const Pair& pair(int index) const { return pairs_.at(static_cast<std::size_t>(index)); }
  std::size_t size() const noexcept { return pairs_.size(); }

  double log_value(int index, double x) const;
  /// d/dx of log_value.
  double log_slope(int index, double x) const;

 private:
  Options options_;
  std::size_t points_ = 0;
  std::vector<Pair> pairs_;
  std::unordered_map<std::uint64_t, int> index_;
  std::vector<double> values_;
  std::vector<double> slopes_;
};

}  // namespace selshare
