// channel.hpp - near-far channel draws and observation synthesis.
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "masim/codebook.hpp"
#include "masim/params.hpp"
#include "masim/prng.hpp"
#include "masim/types.hpp"

namespace masim {

enum class Fading { Rayleigh, None };

struct ChannelEntry {
  cd a;                 // complex amplitude G * d^(-alpha)
  double tau = 0.0;     // delay in [0, M*T], seconds
  bool outage = false;  // |a| outside (a_lo, a_hi)
};

struct PathlossConfig {
  double dmin = 0.5;
  double dmax = 1.5;
  double alpha = 3.0;
  Fading fading = Fading::Rayleigh;
};

// d ~ U[dmin, dmax], G circularly symmetric with E|G|^2 = 1 (or G = 1 when
// fading is disabled), a = G d^(-alpha); outage iff |a| outside (a_lo, a_hi).
ChannelEntry draw_channel(Prng& rng, const PathlossConfig& cfg, double a_lo,
                          double a_hi);

// tau ~ U[0, M*T].
double draw_delay(Prng& rng, int M, double T);

// One active device: identity, channel and codeword.
struct ActiveDevice {
  std::uint64_t id = 0;
  std::uint64_t message = 0;
  ChannelEntry ch;
  DeviceCodeword cw;
};

// Subframe-2 waveform on the local time axis with origin at the nominal
// subframe-2 start; the retained interval is [M*T, C2*T). Stored in factored
// form as a list of shifted chip sequences; cancellation appends components
// with negative coefficients. to_events() renders the merged strictly
// increasing breakpoint/value list of the restriction to [M*T, C2*T).
struct Subframe2Waveform {
  double T = 1.0;
  int M = 0;
  int C2 = 0;

  struct Component {
    cd coeff;
    double t0 = 0.0;  // component delay in [0, M*T]
    std::shared_ptr<const std::vector<std::int8_t>> chips;  // length C2
  };
  std::vector<Component> comps;

  double interval_start() const { return M * T; }
  double interval_end() const { return C2 * T; }

  // Pointwise value of the unrestricted superposition at time t.
  cd value_at(double t) const;

  struct Events {
    std::vector<double> t;    // strictly increasing, t[0] = M*T
    std::vector<cd> val;      // val[i] on [t[i], t[i+1]) (last runs to C2*T)
  };
  Events to_events() const;
};

// Unit-variance complex-normal field addressed by (row, col); synthesis
// scales it to per-dimension variance sigma2 / B.
using NoiseField = std::function<cd(int, int)>;

inline NoiseField no_noise_field() {
  return [](int, int) { return cd(0.0, 0.0); };
}

// Y[b][c] = sum over non-outage devices with b in their subcarrier set of
// a_k exp(-i 2 pi b tau_k / (B T)) g_k[c], plus noise. Devices flagged
// outage are skipped unless include_outage_signal is set. If noise_out is
// non-null it receives the noise matrix alone.
CMatrix synth_frequency(std::span<const ActiveDevice> devices,
                        const SystemParams& p, const NoiseField& noise,
                        bool include_outage_signal = false,
                        CMatrix* noise_out = nullptr);

// Convenience overload drawing noise sequentially (row-major) from rng.
CMatrix synth_frequency(std::span<const ActiveDevice> devices,
                        const SystemParams& p, Prng& rng,
                        bool include_outage_signal = false,
                        CMatrix* noise_out = nullptr);

// Noiseless superposition of delayed chip waveforms; noise enters at the
// statistic level in the delay module, never here.
Subframe2Waveform synth_subframe2(std::span<const ActiveDevice> devices,
                                  const SystemParams& p,
                                  bool include_outage_signal = false);

struct Observation {
  CMatrix Y;
  Subframe2Waveform waveform2;
  double noise_psd = 0.0;
};

}  // namespace masim
