// sic.hpp - the identification-and-decoding loop.
//
// Each sweep classifies every unconsumed subcarrier; verified singletons are
// processed one at a time: decode, delay estimation from subframe 2,
// amplitude estimation, then cancellation from the device's remaining
// subcarriers. Singletons created by cancellation surface in the next sweep.
// The loop stops when a sweep recovers nothing.
//
// Two extensions beyond the frequency-domain scheme are available and on by
// default, because desk-scale parameter sets need them to keep the delay
// statistic's cross-device interference in check:
//   - waveform cancellation: a recovered device's reconstructed chip
//     waveform is subtracted from the subframe-2 observation, so later
//     delay searches see fewer interferers;
//   - strongest-first order: within a sweep, candidates are processed in
//     decreasing |A_dot| instead of subcarrier order. Both orders are
//     deterministic; the recovered set under correct verdicts is identical.
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "masim/channel.hpp"
#include "masim/codebook.hpp"
#include "masim/delay.hpp"
#include "masim/detector.hpp"
#include "masim/params.hpp"
#include "masim/types.hpp"

namespace masim {

// Ground truth for test-mode diagnostics; devices must be exactly those
// whose signal entered the observation.
struct GroundTruth {
  std::span<const ActiveDevice> devices;
  const CMatrix* noise = nullptr;  // frequency-domain noise realization
};

enum class SweepOrder { AmplitudeDesc, SubcarrierAsc };

struct PeelOptions {
  DelayConfig delay;
  SweepOrder order = SweepOrder::AmplitudeDesc;
  bool waveform_cancellation = true;
  std::uint64_t noise_key = 0;  // addresses delay-statistic noise draws
  std::optional<GroundTruth> truth;
};

struct RecoveredDevice {
  std::uint64_t id = 0;
  std::uint64_t message = 0;
  cd a_hat;
  double tau_hat = 0.0;
  int iteration = 0;
  int subcarrier = 0;
};

struct IterationStats {
  int zerotons = 0;
  int singletons = 0;
  int multitons = 0;
  int recovered = 0;
  double max_residual = 0.0;  // max |V_b^c| after the sweep (test mode)
};

struct DecodeReport {
  std::vector<RecoveredDevice> recovered;
  bool frame_error = false;
  int miss_count = 0;
  int false_count = 0;
  int delay_failures = 0;
  int decode_tie_events = 0;
  bool duplicate_subcarrier_sets = false;
  std::vector<IterationStats> iteration_log;
  std::vector<double> residual_trace;     // max |V_b^c| per iteration
  std::vector<double> noise_error_mags;   // |e_l| per recovery (test mode)
};

// a_hat = (1/C) g^T Y_b e^{i 2 pi b tau_hat / (B T)}.
cd estimate_amplitude(std::span<const cd> y_row, std::span<const std::int8_t> g,
                      int b, double tau_hat, const SystemParams& p);

// Y_b' -= a_hat e^{-i 2 pi b' tau_hat / (B T)} g.
void cancel(std::span<cd> y_row, cd a_hat, double tau_hat,
            std::span<const std::int8_t> g, int bprime, const SystemParams& p);

DecodeReport peel(Observation& obs, const SystemParams& p,
                  const CodebookContext& ctx, const PeelOptions& opt);

// Classical peeling on the device/subcarrier bipartite graph assuming
// perfect verdicts; returns indices (into the input) of recoverable devices.
std::vector<int> ideal_oracle_peel(
    const std::vector<std::vector<int>>& device_subcarriers, int B);

}  // namespace masim
