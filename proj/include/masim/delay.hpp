// delay.hpp - two-step continuous delay estimation from subframe 2.
//
// The statistic for a candidate delay tau is the overlap integral of the
// received subframe-2 waveform with the device's chip sequence shifted by
// tau, over the retained interval [M*T, C2*T), plus a complex Gaussian
// noise term of per-dimension variance sigma2*T*I (I = C2 - M). The
// noiseless integral is evaluated in closed form from the factored
// breakpoint representation; no oversampling anywhere on this path.
//
// The search runs in two steps: a crude scan of the sample-spaced grid
// {0, T, ..., M*T} locating a slot of width T, then a fine argmax on a grid
// of step psi = T / ceil(2 T (log2 K)^2 / rho) inside the slot. Two crude
// rules are available:
//   ThresholdCases - the four-case declaration against T_bar = a_lo*T*I/4,
//                    which can declare a failure;
//   Argmax         - take the strongest grid point and search the width-T
//                    slot centred on it; never fails. This is the rule the
//                    desk-scale experiment replications use: at their C2
//                    values the cross-device chip interference routinely
//                    crosses T_bar, so the four-case rule degenerates.
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "masim/channel.hpp"
#include "masim/params.hpp"
#include "masim/types.hpp"

namespace masim {

enum class CrudeRule { ThresholdCases, Argmax };
enum class DelayNoiseMode { PerEvaluation, SharedPerEstimate };

struct DelayConfig {
  CrudeRule crude = CrudeRule::ThresholdCases;
  DelayNoiseMode noise = DelayNoiseMode::PerEvaluation;
};

// Unit-variance complex normal addressed by (stage, index); stage 0 = crude
// grid, stage 1 = fine grid, stage 2 = shared draw. Return {0,0} for
// noiseless runs.
using DelayNoiseFn = std::function<cd(int, int)>;

inline DelayNoiseFn no_delay_noise() {
  return [](int, int) { return cd(0.0, 0.0); };
}

// Search bookkeeping exposed for diagnostics.
struct DelaySearchState {
  double T_bar = 0.0;    // crude threshold
  double psi = 0.0;      // fine grid step
  double lambda = 0.0;   // left boundary of the crude slot
  double tau_star = 0.0; // fine argmax (absolute)
  int I = 0;             // retained sample count C2 - M
  double rho = 0.0;
};

struct CrudeResult {
  bool ok = false;
  double lambda = 0.0;
  std::vector<double> stat_mag;  // |T(qT)| for q = 0..M
};

struct RefineResult {
  double tau_star = 0.0;  // absolute fine argmax
  double lo = 0.0;        // declared interval, clipped to [0, M*T]
  double hi = 0.0;
  double tau_hat = 0.0;   // interval midpoint
  double psi = 0.0;
};

struct DelayEstimate {
  bool ok = false;
  double tau_hat = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  DelaySearchState state;
};

// Exact single-point statistic: closed-form overlap integral plus the
// supplied noise term (already scaled; pass 0 for the noiseless value).
cd correlate(const Subframe2Waveform& w, std::span<const std::int8_t> chips,
             double tau, const SystemParams& p, cd noise = cd(0.0, 0.0));

// Batched exact evaluation of the statistic for one frame. Component
// additions (successive cancellation) are absorbed incrementally via sync().
class FrameDelayEvaluator {
 public:
  FrameDelayEvaluator(const Subframe2Waveform& w, const SystemParams& p);

  // Absorb components appended to the waveform since construction/last sync.
  void sync();

  // Noiseless T(qT) for q = 0..M.
  void coarse(std::span<const std::int8_t> chips, std::vector<cd>& out) const;

  // Noiseless T(lambda + i*psi) for i = 0..n-1 (caller clips the grid so
  // every point lies in [0, M*T] and within [lambda, lambda + T]).
  void fine(std::span<const std::int8_t> chips, double lambda, double psi,
            int n, std::vector<cd>& out) const;

  const SystemParams& params() const { return *p_; }
  const Subframe2Waveform& waveform() const { return *w_; }

 private:
  const Subframe2Waveform* w_;
  const SystemParams* p_;
  std::size_t absorbed_ = 0;
  std::vector<cd> unit_integrals_;  // D[m] = integral over [mT,(m+1)T), m in [M, C2)
};

// Fine grid parameters: psi = T / ceil(2 T lk^2 / rho), lk = max(log2 K, 1).
int fine_grid_steps(const SystemParams& p);

CrudeResult crude_estimate(const FrameDelayEvaluator& ev,
                           std::span<const std::int8_t> chips,
                           const DelayConfig& cfg, const DelayNoiseFn& noise);

RefineResult refine_estimate(const FrameDelayEvaluator& ev,
                             std::span<const std::int8_t> chips, double lambda,
                             const DelayConfig& cfg, const DelayNoiseFn& noise);

DelayEstimate estimate_delay(const FrameDelayEvaluator& ev,
                             std::span<const std::int8_t> chips,
                             const DelayConfig& cfg, const DelayNoiseFn& noise);

// Convenience: builds a throwaway evaluator (tests, single-shot callers).
DelayEstimate estimate_delay(const Subframe2Waveform& w,
                             std::span<const std::int8_t> chips,
                             const SystemParams& p, const DelayConfig& cfg,
                             const DelayNoiseFn& noise);

}  // namespace masim
