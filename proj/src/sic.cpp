#include "masim/sic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "masim/prng.hpp"

namespace masim {

cd estimate_amplitude(std::span<const cd> y_row, std::span<const std::int8_t> g,
                      int b, double tau_hat, const SystemParams& p) {
  if (y_row.size() != g.size() || g.empty())
    throw std::invalid_argument("estimate_amplitude: size mismatch");
  cd dot(0.0, 0.0);
  for (std::size_t c = 0; c < g.size(); ++c)
    dot += static_cast<double>(g[c]) * y_row[c];
  double phase = 2.0 * kPi * b * tau_hat / (p.B * p.T);
  return dot / static_cast<double>(g.size()) * cd(std::cos(phase), std::sin(phase));
}

void cancel(std::span<cd> y_row, cd a_hat, double tau_hat,
            std::span<const std::int8_t> g, int bprime, const SystemParams& p) {
  if (y_row.size() != g.size())
    throw std::invalid_argument("cancel: size mismatch");
  double phase = -2.0 * kPi * bprime * tau_hat / (p.B * p.T);
  cd coef = a_hat * cd(std::cos(phase), std::sin(phase));
  for (std::size_t c = 0; c < g.size(); ++c)
    y_row[c] -= coef * static_cast<double>(g[c]);
}

namespace {

std::vector<std::int8_t> full_sequence(const DeviceCodeword& cw) {
  std::vector<std::int8_t> g;
  g.reserve(cw.g_tilde.size() + cw.g_dot.size());
  g.insert(g.end(), cw.g_tilde.begin(), cw.g_tilde.end());
  g.insert(g.end(), cw.g_dot.begin(), cw.g_dot.end());
  return g;
}

// Max |V_b^c| over the whole matrix: the gap between the current Y and the
// ideal signal of not-yet-recovered devices plus the noise realization.
double max_cancellation_residual(const CMatrix& Y, const GroundTruth& gt,
                                 const std::set<std::uint64_t>& recovered_ids,
                                 const SystemParams& p) {
  CMatrix expect(Y.rows, Y.cols);
  for (const auto& dev : gt.devices) {
    if (recovered_ids.count(dev.id)) continue;
    for (int b : dev.cw.subcarriers) {
      double phase = -2.0 * kPi * b * dev.ch.tau / (p.B * p.T);
      cd A = dev.ch.a * cd(std::cos(phase), std::sin(phase));
      cd* row = expect.row(b);
      for (int c = 0; c < p.C0; ++c)
        row[c] += A * static_cast<double>(dev.cw.g_tilde[static_cast<std::size_t>(c)]);
      for (int c = 0; c < p.C1; ++c)
        row[p.C0 + c] +=
            A * static_cast<double>(dev.cw.g_dot[static_cast<std::size_t>(c)]);
    }
  }
  double mx = 0.0;
  for (int b = 0; b < Y.rows; ++b)
    for (int c = 0; c < Y.cols; ++c) {
      cd w = gt.noise ? (*gt.noise)(b, c) : cd(0.0, 0.0);
      mx = std::max(mx, std::abs(Y(b, c) - expect(b, c) - w));
    }
  return mx;
}

}  // namespace

DecodeReport peel(Observation& obs, const SystemParams& p,
                  const CodebookContext& ctx, const PeelOptions& opt) {
  DecodeReport report;
  CMatrix& Y = obs.Y;
  if (Y.rows != p.B || Y.cols != p.C())
    throw std::invalid_argument("peel: observation shape mismatch");

  FrameDelayEvaluator delay_eval(obs.waveform2, p);

  std::vector<char> consumed(static_cast<std::size_t>(p.B), 0);
  std::set<std::uint64_t> recovered_ids;

  if (opt.truth) {
    // duplicate subcarrier sets among in-signal devices
    std::map<std::vector<int>, int> seen;
    for (const auto& dev : opt.truth->devices)
      if (++seen[dev.cw.subcarriers] > 1) report.duplicate_subcarrier_sets = true;
  }

  struct Candidate {
    int b;
    SubcarrierVerdict v;
  };

  for (int iter = 1; iter <= p.B; ++iter) {
    IterationStats stats;
    std::vector<Candidate> cands;
    for (int b = 0; b < p.B; ++b) {
      if (consumed[static_cast<std::size_t>(b)]) continue;
      SubcarrierVerdict v = classify_subcarrier(
          std::span<const cd>(Y.row(b), static_cast<std::size_t>(p.C())), b, ctx, p);
      if (v.decode_tie) ++report.decode_tie_events;
      switch (v.kind) {
        case VerdictKind::Zeroton: ++stats.zerotons; break;
        case VerdictKind::Multiton: ++stats.multitons; break;
        case VerdictKind::Singleton:
          ++stats.singletons;
          cands.push_back({b, v});
          break;
      }
    }

    if (opt.order == SweepOrder::AmplitudeDesc) {
      std::stable_sort(cands.begin(), cands.end(),
                       [](const Candidate& x, const Candidate& y) {
                         double ax = std::abs(x.v.A_dot), ay = std::abs(y.v.A_dot);
                         if (ax != ay) return ax > ay;
                         return x.b < y.b;
                       });
    }

    int recovered_this_sweep = 0;
    for (const Candidate& cand : cands) {
      int b = cand.b;
      if (consumed[static_cast<std::size_t>(b)]) continue;
      // Revalidate against the current residual: earlier cancellations in
      // this sweep may have altered this subcarrier.
      SubcarrierVerdict v = classify_subcarrier(
          std::span<const cd>(Y.row(b), static_cast<std::size_t>(p.C())), b, ctx, p);
      if (v.decode_tie) ++report.decode_tie_events;
      if (v.kind != VerdictKind::Singleton) continue;

      if (recovered_ids.count(v.id)) {
        consumed[static_cast<std::size_t>(b)] = 1;  // stale echo of a done device
        continue;
      }

      DeviceCodeword cw = make_codeword(ctx, p, v.id, v.message);

      delay_eval.sync();
      std::uint64_t dev_key = mix_key(opt.noise_key, v.id, 0xDE1Au);
      DelayNoiseFn noise = [dev_key](int stage, int idx) {
        return complex_normal_at(dev_key, static_cast<std::uint64_t>(stage),
                                 static_cast<std::uint64_t>(idx));
      };
      DelayEstimate est = estimate_delay(delay_eval, cw.chips, opt.delay, noise);
      if (!est.ok) {
        ++report.delay_failures;
        consumed[static_cast<std::size_t>(b)] = 1;
        continue;
      }

      std::vector<std::int8_t> g = full_sequence(cw);
      cd a_hat = estimate_amplitude(
          std::span<const cd>(Y.row(b), static_cast<std::size_t>(p.C())), g, b,
          est.tau_hat, p);

      for (int bp : cw.subcarriers) {
        if (bp == b) continue;
        if (consumed[static_cast<std::size_t>(bp)]) continue;
        cancel(std::span<cd>(Y.row(bp), static_cast<std::size_t>(p.C())), a_hat,
               est.tau_hat, g, bp, p);
      }
      if (opt.waveform_cancellation) {
        Subframe2Waveform::Component c;
        c.coeff = -a_hat;
        c.t0 = est.tau_hat;
        c.chips = std::make_shared<const std::vector<std::int8_t>>(cw.chips);
        obs.waveform2.comps.push_back(std::move(c));
      }

      consumed[static_cast<std::size_t>(b)] = 1;
      recovered_ids.insert(v.id);
      report.recovered.push_back({v.id, v.message, a_hat, est.tau_hat, iter, b});
      ++recovered_this_sweep;

      if (opt.truth && opt.truth->noise) {
        // error due to noise on the singleton bin used for this recovery
        cd e(0.0, 0.0);
        const cd* wrow = opt.truth->noise->row(b);
        for (std::size_t c2 = 0; c2 < g.size(); ++c2)
          e += static_cast<double>(g[c2]) * wrow[c2];
        report.noise_error_mags.push_back(std::abs(e) / static_cast<double>(g.size()));
      }
    }

    stats.recovered = recovered_this_sweep;
    if (opt.truth)
      stats.max_residual =
          max_cancellation_residual(Y, *opt.truth, recovered_ids, p);
    report.iteration_log.push_back(stats);
    if (opt.truth) report.residual_trace.push_back(stats.max_residual);
    if (recovered_this_sweep == 0) break;
  }

  if (opt.truth) {
    std::set<std::pair<std::uint64_t, std::uint64_t>> in_signal, targets;
    for (const auto& dev : opt.truth->devices) {
      in_signal.insert({dev.id, dev.message});
      if (!dev.ch.outage) targets.insert({dev.id, dev.message});
    }
    std::set<std::pair<std::uint64_t, std::uint64_t>> got;
    for (const auto& r : report.recovered) {
      got.insert({r.id, r.message});
      if (!in_signal.count({r.id, r.message})) ++report.false_count;
    }
    for (const auto& t : targets)
      if (!got.count(t)) ++report.miss_count;
    report.frame_error = report.miss_count > 0 || report.false_count > 0 ||
                         report.delay_failures > 0 ||
                         report.duplicate_subcarrier_sets;
  } else {
    report.frame_error = report.delay_failures > 0;
  }
  return report;
}

std::vector<int> ideal_oracle_peel(
    const std::vector<std::vector<int>>& device_subcarriers, int B) {
  std::vector<std::vector<int>> on_bin(static_cast<std::size_t>(B));
  for (std::size_t k = 0; k < device_subcarriers.size(); ++k)
    for (int b : device_subcarriers[k])
      on_bin[static_cast<std::size_t>(b)].push_back(static_cast<int>(k));

  std::vector<int> degree(static_cast<std::size_t>(B), 0);
  for (int b = 0; b < B; ++b)
    degree[static_cast<std::size_t>(b)] =
        static_cast<int>(on_bin[static_cast<std::size_t>(b)].size());

  std::vector<char> removed(device_subcarriers.size(), 0);
  std::vector<int> order;
  bool progress = true;
  while (progress) {
    progress = false;
    for (int b = 0; b < B; ++b) {
      if (degree[static_cast<std::size_t>(b)] != 1) continue;
      int k = -1;
      for (int cand : on_bin[static_cast<std::size_t>(b)])
        if (!removed[static_cast<std::size_t>(cand)]) k = cand;
      if (k < 0) continue;
      removed[static_cast<std::size_t>(k)] = 1;
      order.push_back(k);
      for (int bp : device_subcarriers[static_cast<std::size_t>(k)])
        --degree[static_cast<std::size_t>(bp)];
      progress = true;
    }
  }
  return order;
}

}  // namespace masim
