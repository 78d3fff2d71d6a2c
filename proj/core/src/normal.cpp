#include "selshare/normal.hpp"

#include <array>
#include <cmath>
#include <limits>

#include <boost/math/distributions/normal.hpp>

#include "selshare/errors.hpp"

namespace selshare {
namespace {

constexpr double kSqrt1_2 = 0.70710678118654752440;
constexpr double kTwoPi = 6.28318530717958647693;

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw DomainError(std::string(what) + ": non-finite argument");
}

// Mills ratio (1 - Phi(x)) / phi(x) for x >= 5 by backward evaluation of
// Laplace's continued fraction 1/(x+1/(x+2/(x+3/(x+...)))).
double mills_ratio_cf(double x) {
  double t = x;
  for (int k = 120; k >= 1; --k) t = x + k / t;
  return 1.0 / t;
}

// Unit upper-tail truncated standard normal: x >= a with a > 0 (Robert, 1995).
double tail_normal(double a, RngStream& rng) {
  const double rate = 0.5 * (a + std::sqrt(a * a + 4.0));
  for (;;) {
    const double z = a - std::log(rng.uniform_open()) / rate;
    const double d = z - rate;
    if (std::log(rng.uniform_open()) <= -0.5 * d * d) return z;
  }
}

// Standard normal truncated to [a, b].
double standard_truncated(double a, double b, RngStream& rng) {
  if (a > 0.3) {
    if (std::isinf(b)) return tail_normal(a, rng);
    // Narrow or far window: exponential proposal restricted to [a, b].
    if (b - a < 0.5 / a) {
      for (;;) {
        const double z = a + (b - a) * rng.uniform();
        if (std::log(rng.uniform_open()) <= 0.5 * (a * a - z * z)) return z;
      }
    }
    for (;;) {
      const double z = tail_normal(a, rng);
      if (z <= b) return z;
    }
  }
  if (b <= 0.0 && b < -0.3) return -standard_truncated(-b, -a, rng);
  // Window touches the body of the density.
  const double mass = 0.5 * (std::erfc(-b * kSqrt1_2) - std::erfc(-a * kSqrt1_2));
  if (mass > 0.25) {
    for (;;) {
      const double z = rng.normal();
      if (z >= a && z <= b) return z;
    }
  }
  // Short window near the centre: uniform proposal under the max density.
  const double peak = (a <= 0.0 && b >= 0.0) ? 0.0 : std::min(std::abs(a), std::abs(b));
  for (;;) {
    const double z = a + (b - a) * rng.uniform();
    if (std::log(rng.uniform_open()) <= 0.5 * (peak * peak - z * z)) return z;
  }
}

}  // namespace

double std_normal_pdf(double x) {
  require_finite(x, "std_normal_pdf");
  return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

double std_normal_cdf(double x) {
  require_finite(x, "std_normal_cdf");
  return 0.5 * std::erfc(-x * kSqrt1_2);
}

double std_normal_log_cdf(double x) {
  require_finite(x, "std_normal_log_cdf");
  if (x > 0.0) return std::log1p(-0.5 * std::erfc(x * kSqrt1_2));
  if (x > -30.0) return std::log(0.5 * std::erfc(-x * kSqrt1_2));
  // Phi(x) = phi(x) * Mills(-x).
  return -0.5 * x * x - kLogSqrt2Pi + std::log(mills_ratio_cf(-x));
}

double inverse_mills(double x) {
  require_finite(x, "inverse_mills");
  if (x > 5.0) return 1.0 / mills_ratio_cf(x);
  return std_normal_pdf(x) / (0.5 * std::erfc(x * kSqrt1_2));
}

double std_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("std_normal_quantile: probability outside (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double bivariate_normal_cdf(double h, double k, double r) {
  if (std::isnan(h) || std::isnan(k) || std::isnan(r)) throw DomainError("bivariate_normal_cdf: NaN argument");
  if (r < -1.0 || r > 1.0) throw DomainError("bivariate_normal_cdf: correlation outside [-1, 1]");
  if (h == -std::numeric_limits<double>::infinity() || k == -std::numeric_limits<double>::infinity()) return 0.0;
  if (h == std::numeric_limits<double>::infinity()) {
    return k == std::numeric_limits<double>::infinity() ? 1.0 : std_normal_cdf(k);
  }
  if (k == std::numeric_limits<double>::infinity()) return std_normal_cdf(h);

  // Upper orthant P(X > dh, Y > dk) evaluated at (-h, -k).
  const double dh = -h;
  const double dk = -k;
  auto phid = [](double x) { return 0.5 * std::erfc(-x * kSqrt1_2); };
  if (r == 0.0) return phid(-dh) * phid(-dk);

  static constexpr std::array<double, 3> w6{0.1713244923791705, 0.3607615730481384, 0.4679139345726904};
  static constexpr std::array<double, 3> x6{0.9324695142031522, 0.6612093864662647, 0.2386191860831970};
  static constexpr std::array<double, 6> w12{0.04717533638651177, 0.1069393259953183, 0.1600783285433464,
                                             0.2031674267230659,  0.2334925365383547, 0.2491470458134029};
  static constexpr std::array<double, 6> x12{0.9815606342467191, 0.9041172563704750, 0.7699026741943050,
                                             0.5873179542866171, 0.3678314989981802, 0.1252334085114692};
  static constexpr std::array<double, 10> w20{0.01761400713915212, 0.04060142980038694, 0.06267204833410906,
                                              0.08327674157670475, 0.1019301198172404,  0.1181945319615184,
                                              0.1316886384491766,  0.1420961093183821,  0.1491729864726037,
                                              0.1527533871307259};
  static constexpr std::array<double, 10> x20{0.9931285991850949, 0.9639719272779138, 0.9122344282513259,
                                              0.8391169718222188, 0.7463319064601508, 0.6360536807265150,
                                              0.5108670019508271, 0.3737060887154196, 0.2277858511416451,
                                              0.07652652113349733};
  const double* wp;
  const double* xp;
  int ng;
  if (std::abs(r) < 0.3) {
    wp = w6.data(); xp = x6.data(); ng = 3;
  } else if (std::abs(r) < 0.75) {
    wp = w12.data(); xp = x12.data(); ng = 6;
  } else {
    wp = w20.data(); xp = x20.data(); ng = 10;
  }

  double hh = dh;
  double kk = dk;
  double hk = hh * kk;
  double bvn = 0.0;
  if (std::abs(r) < 0.925) {
    const double hs = 0.5 * (hh * hh + kk * kk);
    const double asr = 0.5 * std::asin(r);
    for (int i = 0; i < ng; ++i) {
      for (double sign : {-1.0, 1.0}) {
        const double sn = std::sin(asr * (1.0 + sign * xp[i]));
        bvn += wp[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
      }
    }
    bvn = bvn * asr / kTwoPi + phid(-hh) * phid(-kk);
  } else {
    if (r < 0.0) {
      kk = -kk;
      hk = -hk;
    }
    if (std::abs(r) < 1.0) {
      const double as = 1.0 - r * r;
      double a = std::sqrt(as);
      const double bs = (hh - kk) * (hh - kk);
      const double c = (4.0 - hk) / 8.0;
      const double d = (12.0 - hk) / 80.0;
      double asr = -0.5 * (bs / as + hk);
      if (asr > -100.0) bvn = a * std::exp(asr) * (1.0 - c * (bs - as) * (1.0 - d * bs) / 3.0 + c * d * as * as);
      if (hk > -100.0) {
        const double b = std::sqrt(bs);
        const double sp = std::sqrt(kTwoPi) * phid(-b / a);
        bvn -= std::exp(-0.5 * hk) * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0);
      }
      a *= 0.5;
      double sum = 0.0;
      for (int i = 0; i < ng; ++i) {
        for (double sign : {-1.0, 1.0}) {
          const double xi = a * (1.0 + sign * xp[i]);
          const double xs = xi * xi;
          asr = -0.5 * (bs / xs + hk);
          if (asr > -100.0) {
            const double sp = 1.0 + c * xs * (1.0 + 5.0 * d * xs);
            const double rs = std::sqrt(1.0 - xs);
            const double ep = std::exp(-0.5 * hk * xs / ((1.0 + rs) * (1.0 + rs))) / rs;
            sum += wp[i] * std::exp(asr) * (sp - ep);
          }
        }
      }
      bvn = (a * sum - bvn) / kTwoPi;
    }
    if (r > 0.0) {
      bvn += phid(-std::max(hh, kk));
    } else if (hh >= kk) {
      bvn = -bvn;
    } else {
      const double span = hh < 0.0 ? phid(kk) - phid(hh) : phid(-hh) - phid(-kk);
      bvn = span - bvn;
    }
  }
  return std::clamp(bvn, 0.0, 1.0);
}

void BivariateSpec::validate() const {
  if (!(sd_a > 0.0) || !(sd_b > 0.0)) throw DomainError("BivariateSpec: standard deviations must be positive");
  if (!(corr >= -1.0 && corr <= 1.0)) throw DomainError("BivariateSpec: correlation outside [-1, 1]");
  if (!std::isfinite(mean_a) || !std::isfinite(mean_b) || !std::isfinite(sd_a) || !std::isfinite(sd_b)) {
    throw DomainError("BivariateSpec: non-finite field");
  }
}

std::pair<double, double> bivariate_from_standard(const BivariateSpec& spec, double z1, double z2) noexcept {
  const double a = spec.mean_a + spec.sd_a * z1;
  const double b = spec.mean_b + spec.sd_b * (spec.corr * z1 + std::sqrt(std::max(0.0, 1.0 - spec.corr * spec.corr)) * z2);
  return {a, b};
}

std::pair<double, double> sample_bivariate(const BivariateSpec& spec, RngStream& rng) {
  spec.validate();
  const double z1 = rng.normal();
  const double z2 = rng.normal();
  return bivariate_from_standard(spec, z1, z2);
}

double sample_truncated_normal(double mean, double sd, double lower, double upper, RngStream& rng) {
  if (!std::isfinite(mean) || !(sd > 0.0) || !std::isfinite(sd)) {
    throw DomainError("sample_truncated_normal: invalid location or scale");
  }
  if (std::isnan(lower) || std::isnan(upper) || !(lower < upper)) {
    throw DomainError("sample_truncated_normal: empty truncation interval");
  }
  const double a = (lower - mean) / sd;
  const double b = (upper - mean) / sd;
  return mean + sd * standard_truncated(a, b, rng);
}

}  // namespace selshare
