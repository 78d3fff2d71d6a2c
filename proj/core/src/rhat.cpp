#include <cmath>
#include <limits>

#include "selshare/errors.hpp"
#include "selshare/mcmc.hpp"

namespace selshare {

double compute_rhat(std::span<const std::vector<double>> chains) {
  const std::size_t m = chains.size();
  if (m < 2) throw DomainError("compute_rhat: needs at least two chains");
  const std::size_t n = chains.front().size();
  if (n < 10) throw DomainError("compute_rhat: needs at least ten draws per chain");
  for (const auto& c : chains) {
    if (c.size() != n) throw DomainError("compute_rhat: chains must have equal length");
  }
  std::vector<double> means(m, 0.0);
  double grand = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    for (double v : chains[j]) means[j] += v;
    means[j] /= static_cast<double>(n);
    grand += means[j];
  }
  grand /= static_cast<double>(m);
  double between = 0.0;
  for (double mu : means) between += (mu - grand) * (mu - grand);
  between *= static_cast<double>(n) / static_cast<double>(m - 1);
  double within = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    double ss = 0.0;
    for (double v : chains[j]) ss += (v - means[j]) * (v - means[j]);
    within += ss / static_cast<double>(n - 1);
  }
  within /= static_cast<double>(m);

  // Relative to the spread of the draws, treat rounding-level variances as zero.
  const double scale = std::max(std::abs(grand), 1.0);
  const double tiny = 1e-28 * scale * scale;
  const bool no_within = within <= tiny;
  const bool no_between = between <= tiny * static_cast<double>(n);
  if (no_within && no_between) return 1.0;
  if (no_within) return std::numeric_limits<double>::infinity();
  const double nd = static_cast<double>(n);
  const double pooled = within * (nd - 1.0) / nd + between / nd;
  return std::max(1.0, std::sqrt(pooled / within));
}

}  // namespace selshare
