#include "selshare/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/tools/minima.hpp>

#include "selshare/errors.hpp"

namespace selshare {
namespace {

// Feasible step range [t_lo, t_hi] along direction d from x inside the box.
std::pair<double, double> step_range(const std::vector<double>& x, const std::vector<double>& d,
                                     const std::vector<double>& lower, const std::vector<double>& upper,
                                     double cap) {
  double lo = -cap;
  double hi = cap;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (d[i] > 0.0) {
      hi = std::min(hi, (upper[i] - x[i]) / d[i]);
      lo = std::max(lo, (lower[i] - x[i]) / d[i]);
    } else if (d[i] < 0.0) {
      hi = std::min(hi, (lower[i] - x[i]) / d[i]);
      lo = std::max(lo, (upper[i] - x[i]) / d[i]);
    }
  }
  return {std::min(lo, 0.0), std::max(hi, 0.0)};
}

}  // namespace

MaximizeResult powell_maximize(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0,
                               const std::vector<double>& lower, const std::vector<double>& upper,
                               const MaximizeOptions& options) {
  const std::size_t dim = x0.size();
  if (lower.size() != dim || upper.size() != dim) throw DomainError("powell_maximize: bound size mismatch");
  for (std::size_t i = 0; i < dim; ++i) x0[i] = std::clamp(x0[i], lower[i], upper[i]);

  MaximizeResult result;
  auto eval = [&](const std::vector<double>& x) {
    ++result.evaluations;
    const double v = f(x);
    return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
  };

  std::vector<std::vector<double>> directions(dim, std::vector<double>(dim, 0.0));
  for (std::size_t i = 0; i < dim; ++i) directions[i][i] = 1.0;

  std::vector<double> x = x0;
  double fx = eval(x);
  std::vector<double> trial(dim);

  auto line_search = [&](const std::vector<double>& d) {
    const auto [lo, hi] = step_range(x, d, lower, upper, options.max_step);
    if (hi - lo <= 0.0) return 0.0;
    auto neg = [&](double t) {
      for (std::size_t i = 0; i < dim; ++i) trial[i] = std::clamp(x[i] + t * d[i], lower[i], upper[i]);
      return -eval(trial);
    };
    std::uintmax_t max_iter = 200;
    const auto [t, negv] = boost::math::tools::brent_find_minima(neg, lo, hi, 40, max_iter);
    // Brent never evaluates the bracket ends; keep the current point if it was better.
    if (-negv > fx) {
      for (std::size_t i = 0; i < dim; ++i) x[i] = std::clamp(x[i] + t * d[i], lower[i], upper[i]);
      const double gain = -negv - fx;
      fx = -negv;
      return gain;
    }
    return 0.0;
  };

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    result.iterations = iter + 1;
    const std::vector<double> start = x;
    const double f_start = fx;
    double biggest = 0.0;
    std::size_t biggest_dir = 0;
    for (std::size_t k = 0; k < dim; ++k) {
      const double gain = line_search(directions[k]);
      if (gain > biggest) {
        biggest = gain;
        biggest_dir = k;
      }
    }
    if (fx - f_start < options.tolerance) {
      result.converged = true;
      break;
    }
    std::vector<double> moved(dim);
    double norm = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      moved[i] = x[i] - start[i];
      norm += moved[i] * moved[i];
    }
    if (norm > 0.0 && dim > 1) {
      line_search(moved);
      directions[biggest_dir] = directions[dim - 1];
      directions[dim - 1] = moved;
    }
  }
  result.x = x;
  result.value = fx;
  return result;
}

std::vector<std::vector<double>> numerical_hessian(const std::function<double(const std::vector<double>&)>& f,
                                                   const std::vector<double>& x, const std::vector<double>& steps) {
  const std::size_t dim = x.size();
  std::vector<std::vector<double>> h(dim, std::vector<double>(dim, 0.0));
  const double f0 = f(x);
  std::vector<double> p = x;
  for (std::size_t i = 0; i < dim; ++i) {
    p[i] = x[i] + steps[i];
    const double fp = f(p);
    p[i] = x[i] - steps[i];
    const double fm = f(p);
    p[i] = x[i];
    h[i][i] = (fp - 2.0 * f0 + fm) / (steps[i] * steps[i]);
  }
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = i + 1; j < dim; ++j) {
      double acc = 0.0;
      for (const auto& [si, sj, sign] : {std::tuple{1, 1, 1}, std::tuple{1, -1, -1}, std::tuple{-1, 1, -1},
                                        std::tuple{-1, -1, 1}}) {
        p[i] = x[i] + si * steps[i];
        p[j] = x[j] + sj * steps[j];
        acc += sign * f(p);
      }
      p[i] = x[i];
      p[j] = x[j];
      h[i][j] = h[j][i] = acc / (4.0 * steps[i] * steps[j]);
    }
  }
  return h;
}

std::vector<std::vector<double>> invert_spd(const std::vector<std::vector<double>>& m) {
  const std::size_t n = m.size();
  std::vector<std::vector<double>> l(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = m[i][j];
      for (std::size_t k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
      if (i == j) {
        if (!(s > 0.0)) return {};
        l[i][i] = std::sqrt(s);
      } else {
        l[i][j] = s / l[j][j];
      }
    }
  }
  // inv(L) then inv(M) = inv(L)^T inv(L).
  std::vector<std::vector<double>> li(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    li[i][i] = 1.0 / l[i][i];
    for (std::size_t j = 0; j < i; ++j) {
      double s = 0.0;
      for (std::size_t k = j; k < i; ++k) s -= l[i][k] * li[k][j];
      li[i][j] = s / l[i][i];
    }
  }
  std::vector<std::vector<double>> inv(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = std::max(i, j); k < n; ++k) s += li[k][i] * li[k][j];
      inv[i][j] = s;
    }
  }
  return inv;
}

}  // namespace selshare
