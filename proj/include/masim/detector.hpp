// detector.hpp - robust subcarrier detection.
#pragma once

#include <span>

#include "masim/codebook.hpp"
#include "masim/params.hpp"
#include "masim/types.hpp"

namespace masim {

enum class VerdictKind { Zeroton, Singleton, Multiton };

struct SubcarrierVerdict {
  VerdictKind kind = VerdictKind::Multiton;
  std::uint64_t id = 0;
  std::uint64_t message = 0;
  cd A_dot;                     // least-squares amplitude on subframe 1
  double theta_hat = 0.0;       // reference-symbol phase estimate
  double residual_energy = 0.0; // verification residual (or ||Ydot||^2)
  bool decode_tie = false;      // subframe-0 voting tie occurred
};

// ||Ydot||^2 < eta.
bool detect_zeroton(std::span<const cd> y_dot, double eta);

// Phase of the reference symbol; throws on an exactly-zero input (the
// caller treats that subcarrier as a multiton).
double estimate_phase(cd y_tilde_0);

struct CandidateDecode {
  bool ok = false;
  bool tie = false;
  std::uint64_t id = 0;
  std::uint64_t message = 0;
};

// Hard decisions on Re{Ytilde[c] e^{-i theta}} for c = 1..C0-1, decoded and
// checked for hash consistency (b must be among the decoded id's
// subcarriers). Any failure is multiton evidence.
CandidateDecode decode_candidate(std::span<const cd> y_tilde, double theta_hat,
                                 const CodebookContext& ctx,
                                 const SystemParams& p, int b);

struct VerifyResult {
  bool accept = false;
  cd A_dot;
  double residual = 0.0;
};

// A_dot = g_dot^T Ydot / C1; accept iff ||Ydot - A_dot g_dot||^2 <= eta.
VerifyResult verify_singleton(std::span<const cd> y_dot,
                              std::span<const std::int8_t> g_dot, double eta);

// Full verdict pipeline for one subcarrier row (length C0 + C1).
SubcarrierVerdict classify_subcarrier(std::span<const cd> y_row, int b,
                                      const CodebookContext& ctx,
                                      const SystemParams& p);

}  // namespace masim
