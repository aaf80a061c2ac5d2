#include "oracles.hpp"

#include <cmath>
#include <stdexcept>

namespace masim::testing {

namespace {

double gamma_p_series(double a, double x) {
  double sum = 1.0 / a;
  double term = sum;
  for (int n = 1; n < 500; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-15) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_contfrac(double a, double x) {
  // Lentz's algorithm for the continued fraction of Q(a, x).
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-15) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double gamma_p(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_p domain");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_contfrac(a, x);
}

double chi2_cdf(double x, int k) {
  if (x <= 0.0) return 0.0;
  return gamma_p(k / 2.0, x / 2.0);
}

bool within_3sigma(double observed, int n, double p) {
  double se = std::sqrt(p * (1.0 - p) / n);
  return std::abs(observed - p) <= 3.0 * se + 1e-12;
}

cd direct_waveform_value(std::span<const ActiveDevice> devices, double t,
                         double T, int C2) {
  cd acc(0.0, 0.0);
  for (const auto& dev : devices) {
    if (dev.ch.outage) continue;
    double u = t - dev.ch.tau;
    if (u < 0.0) continue;
    int idx = static_cast<int>(std::floor(u / T));
    if (idx < 0 || idx >= C2) continue;
    acc += dev.ch.a * static_cast<double>(dev.cw.chips[static_cast<std::size_t>(idx)]);
  }
  return acc;
}

}  // namespace masim::testing
