#include "masim/delay.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace masim {

namespace {

// chip value with out-of-range indices reading as 0
inline double chip_at(const std::vector<std::int8_t>& c, int i) {
  if (i < 0 || i >= static_cast<int>(c.size())) return 0.0;
  return static_cast<double>(c[static_cast<std::size_t>(i)]);
}

// wrap x into (0, T]
inline double wrap_pos(double x, double T) {
  double u = x - T * std::floor(x / T);
  if (u <= 0.0) u += T;
  if (u > T) u = T;
  return u;
}

}  // namespace

cd correlate(const Subframe2Waveform& w, std::span<const std::int8_t> chips,
             double tau, const SystemParams& p, cd noise) {
  const double T = w.T;
  const double start = w.interval_start();
  const double end = w.interval_end();
  if (tau < -1e-12 || tau > p.M * T + 1e-12)
    throw std::invalid_argument("correlate: tau outside [0, M*T]");
  if (static_cast<int>(chips.size()) != w.C2)
    throw std::invalid_argument("correlate: chip length mismatch");

  cd acc(0.0, 0.0);
  for (const auto& comp : w.comps) {
    const auto& src = *comp.chips;
    double sum = 0.0;
    int m_lo = std::max(0, static_cast<int>(std::floor((start - tau) / T)));
    int m_hi = std::min(w.C2 - 1,
                        static_cast<int>(std::ceil((end - tau) / T)) - 1);
    for (int m = m_lo; m <= m_hi; ++m) {
      double seg_lo = std::max(start, tau + m * T);
      double seg_hi = std::min(end, tau + (m + 1) * T);
      if (seg_hi <= seg_lo) continue;
      double ck = static_cast<double>(chips[static_cast<std::size_t>(m)]);
      int i = static_cast<int>(std::floor((seg_lo - comp.t0) / T));
      double boundary = comp.t0 + (i + 1) * T;
      if (boundary < seg_hi) {
        sum += ck * (boundary - seg_lo) * chip_at(src, i);
        sum += ck * (seg_hi - boundary) * chip_at(src, i + 1);
      } else {
        sum += ck * (seg_hi - seg_lo) * chip_at(src, i);
      }
    }
    acc += comp.coeff * sum;
  }
  return acc + noise;
}

FrameDelayEvaluator::FrameDelayEvaluator(const Subframe2Waveform& w,
                                         const SystemParams& p)
    : w_(&w), p_(&p) {
  if (w.C2 <= w.M) throw std::invalid_argument("delay evaluator: C2 <= M");
  unit_integrals_.assign(static_cast<std::size_t>(w.C2), cd(0.0, 0.0));
  sync();
}

void FrameDelayEvaluator::sync() {
  const double T = w_->T;
  for (std::size_t ci = absorbed_; ci < w_->comps.size(); ++ci) {
    const auto& comp = w_->comps[ci];
    const auto& src = *comp.chips;
    int q = static_cast<int>(std::floor(comp.t0 / T));
    double f = comp.t0 - q * T;
    for (int m = w_->M; m < w_->C2; ++m) {
      double s;
      if (f > 0.0) {
        s = f * chip_at(src, m - q - 1) + (T - f) * chip_at(src, m - q);
      } else {
        s = T * chip_at(src, m - q);
      }
      unit_integrals_[static_cast<std::size_t>(m)] += comp.coeff * s;
    }
  }
  absorbed_ = w_->comps.size();
}

void FrameDelayEvaluator::coarse(std::span<const std::int8_t> chips,
                                 std::vector<cd>& out) const {
  const int M = w_->M;
  const int C2 = w_->C2;
  out.assign(static_cast<std::size_t>(M) + 1, cd(0.0, 0.0));
  for (int q = 0; q <= M; ++q) {
    cd acc(0.0, 0.0);
    int j_lo = std::max(0, M - q);
    int j_hi = C2 - 1 - q;
    for (int j = j_lo; j <= j_hi; ++j)
      acc += static_cast<double>(chips[static_cast<std::size_t>(j)]) *
             unit_integrals_[static_cast<std::size_t>(j + q)];
    out[static_cast<std::size_t>(q)] = acc;
  }
}

void FrameDelayEvaluator::fine(std::span<const std::int8_t> chips,
                               double lambda, double psi, int n,
                               std::vector<cd>& out) const {
  const double T = w_->T;
  const int C2 = w_->C2;
  const double start = w_->interval_start();
  const double end = w_->interval_end();
  out.assign(static_cast<std::size_t>(n), cd(0.0, 0.0));
  if (n <= 0) return;

  // anchor value and initial slope at lambda+
  cd value = correlate(*w_, chips, lambda, *p_);

  // probe-grid samples xs[m] = restricted x'((lambda + mT)+), m = 0..C2
  std::vector<cd> xs(static_cast<std::size_t>(C2) + 1, cd(0.0, 0.0));
  for (const auto& comp : w_->comps) {
    const auto& src = *comp.chips;
    int ibase = static_cast<int>(std::floor((lambda - comp.t0) / T));
    for (int m = 0; m <= C2; ++m) {
      double t = lambda + m * T;
      if (t < start || t >= end) continue;
      double c = chip_at(src, ibase + m);
      if (c != 0.0) xs[static_cast<std::size_t>(m)] += comp.coeff * c;
    }
  }
  cd slope(0.0, 0.0);
  for (int m = 0; m <= C2; ++m) {
    double cm1 = (m >= 1) ? static_cast<double>(chips[static_cast<std::size_t>(m - 1)]) : 0.0;
    double cm = (m < C2) ? static_cast<double>(chips[static_cast<std::size_t>(m)]) : 0.0;
    if (cm1 != cm) slope += (cm1 - cm) * xs[static_cast<std::size_t>(m)];
  }

  // slope-change events in (0, T]: one per component plus the window edges
  struct Event {
    double u;
    cd jump;
  };
  std::vector<Event> events;
  events.reserve(w_->comps.size() + 1);
  for (const auto& comp : w_->comps) {
    const auto& src = *comp.chips;
    double u = wrap_pos(comp.t0 - lambda, T);
    int ibase = static_cast<int>(std::llround((lambda + u - comp.t0) / T));
    cd jump(0.0, 0.0);
    for (int m = 0; m <= C2; ++m) {
      double t = lambda + u + m * T;
      if (!(t > start && t < end)) continue;  // edge activation handled below
      double cm1 = (m >= 1) ? static_cast<double>(chips[static_cast<std::size_t>(m - 1)]) : 0.0;
      double cm = (m < C2) ? static_cast<double>(chips[static_cast<std::size_t>(m)]) : 0.0;
      if (cm1 == cm) continue;
      double d = chip_at(src, ibase + m) - chip_at(src, ibase + m - 1);
      if (d != 0.0) jump += (cm1 - cm) * comp.coeff * d;
    }
    events.push_back({u, jump});
  }
  {
    // probe chips sliding across the window edges M*T and C2*T
    double uE = wrap_pos(-lambda, T);
    cd jump(0.0, 0.0);
    int mL = static_cast<int>(std::llround((start - lambda - uE) / T));
    if (mL >= 0 && mL <= C2) {
      double cm1 = (mL >= 1) ? static_cast<double>(chips[static_cast<std::size_t>(mL - 1)]) : 0.0;
      double cm = (mL < C2) ? static_cast<double>(chips[static_cast<std::size_t>(mL)]) : 0.0;
      jump += (cm1 - cm) * w_->value_at(start);
    }
    int mR = static_cast<int>(std::llround((end - lambda - uE) / T));
    if (mR >= 0 && mR <= C2) {
      double cm1 = (mR >= 1) ? static_cast<double>(chips[static_cast<std::size_t>(mR - 1)]) : 0.0;
      double cm = (mR < C2) ? static_cast<double>(chips[static_cast<std::size_t>(mR)]) : 0.0;
      // value just below the upper edge
      cd x_end(0.0, 0.0);
      for (const auto& comp : w_->comps) {
        int i = static_cast<int>(std::ceil((end - comp.t0) / T)) - 1;
        x_end += comp.coeff * chip_at(*comp.chips, i);
      }
      jump -= (cm1 - cm) * x_end;
    }
    events.push_back({uE, jump});
  }
  std::sort(events.begin(), events.end(),
            [](const Event& a, const Event& b) { return a.u < b.u; });

  // sweep: emit values at u = i*psi
  out[0] = value;
  double u_cur = 0.0;
  std::size_t e = 0;
  for (int i = 1; i < n; ++i) {
    double u_next = i * psi;
    while (e < events.size() && events[e].u <= u_next) {
      value += slope * (events[e].u - u_cur);
      u_cur = events[e].u;
      slope += events[e].jump;
      ++e;
    }
    value += slope * (u_next - u_cur);
    u_cur = u_next;
    out[static_cast<std::size_t>(i)] = value;
  }
}

int fine_grid_steps(const SystemParams& p) {
  double lk = p.log2K();
  return static_cast<int>(std::ceil(2.0 * p.T * lk * lk / p.rho));
}

CrudeResult crude_estimate(const FrameDelayEvaluator& ev,
                           std::span<const std::int8_t> chips,
                           const DelayConfig& cfg, const DelayNoiseFn& noise) {
  const SystemParams& p = ev.params();
  const double T = p.T;
  const int M = p.M;
  const double t_bar = p.a_lo * T * p.I() / 4.0;
  const double nscale = std::sqrt(p.sigma2 * T * p.I());

  std::vector<cd> stats;
  ev.coarse(chips, stats);
  CrudeResult r;
  r.stat_mag.resize(stats.size());
  cd shared = (cfg.noise == DelayNoiseMode::SharedPerEstimate)
                  ? noise(2, 0)
                  : cd(0.0, 0.0);
  for (int q = 0; q <= M; ++q) {
    cd z = (cfg.noise == DelayNoiseMode::SharedPerEstimate) ? shared : noise(0, q);
    r.stat_mag[static_cast<std::size_t>(q)] =
        std::abs(stats[static_cast<std::size_t>(q)] + nscale * z);
  }

  if (cfg.crude == CrudeRule::Argmax) {
    int best = 0;
    for (int q = 1; q <= M; ++q)
      if (r.stat_mag[static_cast<std::size_t>(q)] > r.stat_mag[static_cast<std::size_t>(best)])
        best = q;
    double lam = best * T - T / 2.0;
    double lam_hi = std::max(0.0, M * T - T);
    r.lambda = std::clamp(lam, 0.0, lam_hi);
    r.ok = true;
    return r;
  }

  // four-case declaration
  std::vector<int> exceed;
  for (int q = 0; q <= M; ++q)
    if (r.stat_mag[static_cast<std::size_t>(q)] >= t_bar) exceed.push_back(q);

  if (exceed.size() == 1) {
    int i = exceed[0];
    if (i == 0) {
      r.lambda = 0.0;
      r.ok = true;
    } else if (i == M) {
      r.lambda = (M - 1) * T;
      r.ok = true;
    } else {
      r.lambda = i * T - T / 2.0;
      r.ok = true;
    }
  } else if (exceed.size() == 2 && exceed[1] == exceed[0] + 1) {
    r.lambda = exceed[0] * T;
    r.ok = true;
  }
  return r;
}

RefineResult refine_estimate(const FrameDelayEvaluator& ev,
                             std::span<const std::int8_t> chips, double lambda,
                             const DelayConfig& cfg, const DelayNoiseFn& noise) {
  const SystemParams& p = ev.params();
  const double T = p.T;
  const double mt = p.M * T;
  const int F = fine_grid_steps(p);
  const double psi = T / F;
  const double nscale = std::sqrt(p.sigma2 * T * p.I());

  int n = F + 1;
  while (n > 1 && lambda + (n - 1) * psi > mt + 1e-12) --n;

  std::vector<cd> stats;
  ev.fine(chips, lambda, psi, n, stats);
  cd shared = (cfg.noise == DelayNoiseMode::SharedPerEstimate)
                  ? noise(2, 0)
                  : cd(0.0, 0.0);
  int best = 0;
  double best_mag = -1.0;
  for (int i = 0; i < n; ++i) {
    cd z = (cfg.noise == DelayNoiseMode::SharedPerEstimate) ? shared : noise(1, i);
    double mag = std::abs(stats[static_cast<std::size_t>(i)] + nscale * z);
    if (mag > best_mag) {
      best_mag = mag;
      best = i;
    }
  }

  RefineResult r;
  r.psi = psi;
  r.tau_star = lambda + best * psi;
  double lk = p.log2K();
  double w = p.rho / (2.0 * lk * lk);
  r.lo = std::max(0.0, r.tau_star - w);
  r.hi = std::min(r.tau_star + w, mt);
  r.tau_hat = 0.5 * (r.lo + r.hi);
  return r;
}

DelayEstimate estimate_delay(const FrameDelayEvaluator& ev,
                             std::span<const std::int8_t> chips,
                             const DelayConfig& cfg, const DelayNoiseFn& noise) {
  const SystemParams& p = ev.params();
  DelayEstimate est;
  est.state.T_bar = p.a_lo * p.T * p.I() / 4.0;
  est.state.I = p.I();
  est.state.rho = p.rho;

  CrudeResult cr = crude_estimate(ev, chips, cfg, noise);
  if (!cr.ok) return est;  // delay estimation failure
  est.state.lambda = cr.lambda;

  RefineResult rr = refine_estimate(ev, chips, cr.lambda, cfg, noise);
  est.state.psi = rr.psi;
  est.state.tau_star = rr.tau_star;
  est.ok = true;
  est.tau_hat = rr.tau_hat;
  est.lo = rr.lo;
  est.hi = rr.hi;
  return est;
}

DelayEstimate estimate_delay(const Subframe2Waveform& w,
                             std::span<const std::int8_t> chips,
                             const SystemParams& p, const DelayConfig& cfg,
                             const DelayNoiseFn& noise) {
  FrameDelayEvaluator ev(w, p);
  return estimate_delay(ev, chips, cfg, noise);
}

}  // namespace masim
