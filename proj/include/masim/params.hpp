// params.hpp - scheme parameters, derivation rules and grouping plans.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace masim {

// Every scalar of the scheme. Two derivation modes exist: the scaling-law
// ("theorem") mode where B, C0, C1, C2 all follow from (K, N, S, M, R, D,
// beta0..beta2), and the simulation mode where B = 6K, D = 3,
// C0 = 2 + 2*ceil(log2 N), C1 = ceil(log2 K) and C2 is an experiment input.
// All logarithms are base 2 except the eta admissibility bound, which is
// stated in natural log.
struct SystemParams {
  int K = 0;              // active-device count
  std::uint64_t N = 0;    // device population
  std::uint64_t S = 1;    // messages per device
  int B = 0;              // FFT length / subcarrier count
  int M = 0;              // delay bound in samples
  int D = 3;              // subcarriers per device
  int C0 = 0;             // subframe-0 OFDM symbols (first is the reference)
  int C1 = 0;             // subframe-1 OFDM symbols
  int C2 = 0;             // subframe-2 chips (0 = not yet chosen)
  double R = 0.5;         // code rate in (0, 1]
  double sigma2 = 0.0;    // noise PSD
  double a_lo = 1.0;      // amplitude lower bound
  double a_hi = 1.0;      // amplitude upper bound (a_lo < a_hi)
  double eta = 1.0;       // detection threshold (a_lo^2 by default)
  double beta0 = 0.0;
  double beta1 = 1.0;
  double beta2 = 0.0;
  double rho = 0.0;       // delay refinement constant (time units)
  double varrho = 0.0;    // amplitude refinement constant
  double T = 1.0;         // sample duration, seconds

  double f() const { return 1.0 / (static_cast<double>(B) * T); }
  int C() const { return C0 + C1; }
  int I() const { return C2 - M; }

  // log2(K) floored at 1 so refinement grids stay finite for K < 2.
  double log2K() const;
};

// Validates the structural invariants shared by both modes; throws
// std::invalid_argument with a description of the first violation.
void validate(const SystemParams& p);

// ceil(log2(n)) for n >= 1.
int ceil_log2_u64(std::uint64_t n);

// Repetition factor of the default rate-R repetition code; throws unless
// 1/R is a positive integer.
int repetition_factor(double R);

SystemParams derive_theorem_params(int K, std::uint64_t N, std::uint64_t S,
                                   int M, double R, int D, double beta0,
                                   double beta1, double beta2, double a_lo,
                                   double a_hi, double sigma2);

// B = 6K, D = 3, C0 = 2 + 2*ceil(log2 N), C1 = ceil(log2 K). C2 is left 0
// for the caller to fill from the experiment description.
SystemParams derive_simulation_params(int K, std::uint64_t N, int M,
                                      double sigma2, double a_lo, double a_hi);

// L = (B + M)(C0 + C1) + C2, in samples.
std::int64_t codelength(const SystemParams& p);

enum class HashWidthMode { Shared, PerGroup };

struct GroupRow {
  double a_lo = 0.0;        // amplitude sub-range [a_lo, a_hi)
  double a_hi = 0.0;
  int members = 0;          // nominal member count K_g
  SystemParams params;      // per-group parameters
  std::int64_t L = 0;       // per-group codelength
};

struct GroupingPlan {
  std::vector<GroupRow> groups;
  std::int64_t total_codelength = 0;
  HashWidthMode hash_width_mode = HashWidthMode::Shared;
};

// Plans time division: amplitude sub-ranges must partition [a_lo, a_hi) and
// group sizes must sum to K. In Shared mode every group keeps the hash width
// and subframe-1 length of the undivided system (B = 6K, C1 = ceil(log2 K));
// in PerGroup mode each group derives them from its own size.
GroupingPlan plan_grouping(int K, std::uint64_t N, int M, double sigma2,
                           const std::vector<std::pair<double, double>>& ranges,
                           const std::vector<int>& group_sizes,
                           const std::vector<int>& C2_per_group,
                           HashWidthMode mode);

struct EtaAdmissibility {
  bool admissible = false;
  double bound = 0.0;   // required lower bound on eta
  double slack = 0.0;   // eta - bound
};

// eta >= 32 sigma^2 ceil(beta1 log2 K) ln(K) / (beta0 K).
EtaAdmissibility check_eta_admissible(const SystemParams& p);

// Refinement constants implied by the residual-propagation analysis for a
// given component-size constant alpha_graph; exposed for reporting only.
struct RefinementConstants {
  double rho = 0.0;
  double varrho = 0.0;
};
RefinementConstants analysis_refinement_constants(const SystemParams& p,
                                                  double alpha_graph);

}  // namespace masim
