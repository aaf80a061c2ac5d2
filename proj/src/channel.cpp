#include "masim/channel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace masim {

ChannelEntry draw_channel(Prng& rng, const PathlossConfig& cfg, double a_lo,
                          double a_hi) {
  if (!(cfg.dmin > 0.0) || !(cfg.dmin < cfg.dmax))
    throw std::invalid_argument("draw_channel: need 0 < dmin < dmax");
  if (!(cfg.alpha >= 0.0)) throw std::invalid_argument("draw_channel: alpha < 0");
  ChannelEntry e;
  double d = rng.uniform(cfg.dmin, cfg.dmax);
  cd g;
  if (cfg.fading == Fading::Rayleigh) {
    // E|G|^2 = 1: per-dimension std 1/sqrt(2).
    g = rng.complex_normal() * (1.0 / std::sqrt(2.0));
  } else {
    g = cd(1.0, 0.0);
  }
  e.a = g * std::pow(d, -cfg.alpha);
  double mag = std::abs(e.a);
  e.outage = !(mag > a_lo && mag < a_hi);
  return e;
}

double draw_delay(Prng& rng, int M, double T) {
  if (M < 0) throw std::invalid_argument("draw_delay: M < 0");
  if (M == 0) return 0.0;
  return rng.uniform(0.0, M * T);
}

cd Subframe2Waveform::value_at(double t) const {
  cd acc(0.0, 0.0);
  for (const auto& c : comps) {
    double u = t - c.t0;
    if (u < 0.0) continue;
    int idx = static_cast<int>(std::floor(u / T));
    if (idx < 0 || idx >= C2) continue;
    acc += c.coeff * static_cast<double>((*c.chips)[static_cast<std::size_t>(idx)]);
  }
  return acc;
}

Subframe2Waveform::Events Subframe2Waveform::to_events() const {
  const double lo = interval_start();
  const double hi = interval_end();
  std::vector<double> pts;
  pts.push_back(lo);
  for (const auto& c : comps) {
    // chip boundaries t0 + i*T strictly inside (lo, hi)
    int i_lo = static_cast<int>(std::ceil((lo - c.t0) / T));
    for (int i = std::max(i_lo, 0); i <= C2; ++i) {
      double t = c.t0 + i * T;
      if (t <= lo) continue;
      if (t >= hi) break;
      pts.push_back(t);
    }
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

  Events ev;
  ev.t = std::move(pts);
  ev.val.reserve(ev.t.size());
  for (double t : ev.t) ev.val.push_back(value_at(t));
  return ev;
}

namespace {

CMatrix synth_frequency_impl(std::span<const ActiveDevice> devices,
                             const SystemParams& p, const NoiseField& noise,
                             bool include_outage_signal, CMatrix* noise_out) {
  const int C = p.C();
  CMatrix Y(p.B, C);
  for (const auto& dev : devices) {
    if (dev.ch.outage && !include_outage_signal) continue;
    for (int b : dev.cw.subcarriers) {
      double phase = -2.0 * kPi * b * dev.ch.tau / (p.B * p.T);
      cd A = dev.ch.a * cd(std::cos(phase), std::sin(phase));
      cd* row = Y.row(b);
      for (int c = 0; c < p.C0; ++c)
        row[c] += A * static_cast<double>(dev.cw.g_tilde[static_cast<std::size_t>(c)]);
      for (int c = 0; c < p.C1; ++c)
        row[p.C0 + c] +=
            A * static_cast<double>(dev.cw.g_dot[static_cast<std::size_t>(c)]);
    }
  }
  if (noise_out) *noise_out = CMatrix(p.B, C);
  if (p.sigma2 > 0.0) {
    double s = std::sqrt(p.sigma2 / p.B);  // per-dimension std
    for (int b = 0; b < p.B; ++b)
      for (int c = 0; c < C; ++c) {
        cd w = s * noise(b, c);
        Y(b, c) += w;
        if (noise_out) (*noise_out)(b, c) = w;
      }
  }
  return Y;
}

}  // namespace

CMatrix synth_frequency(std::span<const ActiveDevice> devices,
                        const SystemParams& p, const NoiseField& noise,
                        bool include_outage_signal, CMatrix* noise_out) {
  return synth_frequency_impl(devices, p, noise, include_outage_signal, noise_out);
}

CMatrix synth_frequency(std::span<const ActiveDevice> devices,
                        const SystemParams& p, Prng& rng,
                        bool include_outage_signal, CMatrix* noise_out) {
  NoiseField f = [&rng](int, int) { return rng.complex_normal(); };
  return synth_frequency_impl(devices, p, f, include_outage_signal, noise_out);
}

Subframe2Waveform synth_subframe2(std::span<const ActiveDevice> devices,
                                  const SystemParams& p,
                                  bool include_outage_signal) {
  if (p.C2 <= p.M)
    throw std::invalid_argument("synth_subframe2: C2 must exceed M");
  Subframe2Waveform w;
  w.T = p.T;
  w.M = p.M;
  w.C2 = p.C2;
  for (const auto& dev : devices) {
    if (dev.ch.outage && !include_outage_signal) continue;
    if (static_cast<int>(dev.cw.chips.size()) != p.C2)
      throw std::invalid_argument("synth_subframe2: chip length mismatch");
    Subframe2Waveform::Component c;
    c.coeff = dev.ch.a;
    c.t0 = dev.ch.tau;
    c.chips = std::make_shared<const std::vector<std::int8_t>>(dev.cw.chips);
    w.comps.push_back(std::move(c));
  }
  return w;
}

}  // namespace masim
