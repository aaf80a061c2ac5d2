#include "masim/detector.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace masim {

bool detect_zeroton(std::span<const cd> y_dot, double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("detect_zeroton: eta <= 0");
  double e = 0.0;
  for (const cd& y : y_dot) e += std::norm(y);
  return e < eta;
}

double estimate_phase(cd y_tilde_0) {
  if (y_tilde_0 == cd(0.0, 0.0))
    throw std::invalid_argument("estimate_phase: zero reference symbol");
  return std::arg(y_tilde_0);
}

CandidateDecode decode_candidate(std::span<const cd> y_tilde, double theta_hat,
                                 const CodebookContext& ctx,
                                 const SystemParams& p, int b) {
  CandidateDecode out;
  const cd rot(std::cos(-theta_hat), std::sin(-theta_hat));
  std::vector<std::int8_t> hard(y_tilde.size() - 1);
  for (std::size_t c = 1; c < y_tilde.size(); ++c)
    hard[c - 1] = (std::real(y_tilde[c] * rot) < 0.0) ? -1 : 1;

  Sub0Decode dec = decode_subframe0(hard, p.N, p.S, p.R);
  out.tie = dec.tie;
  if (!dec.ok) return out;

  auto set = assign_subcarriers(dec.id, p.B, p.D, ctx.public_seed);
  if (!std::binary_search(set.begin(), set.end(), b)) return out;

  out.ok = true;
  out.id = dec.id;
  out.message = dec.message;
  return out;
}

VerifyResult verify_singleton(std::span<const cd> y_dot,
                              std::span<const std::int8_t> g_dot, double eta) {
  if (y_dot.size() != g_dot.size() || y_dot.empty())
    throw std::invalid_argument("verify_singleton: size mismatch");
  VerifyResult r;
  const double c1 = static_cast<double>(y_dot.size());
  cd dot(0.0, 0.0);
  for (std::size_t c = 0; c < y_dot.size(); ++c)
    dot += static_cast<double>(g_dot[c]) * y_dot[c];
  r.A_dot = dot / c1;
  double res = 0.0;
  for (std::size_t c = 0; c < y_dot.size(); ++c)
    res += std::norm(y_dot[c] - r.A_dot * static_cast<double>(g_dot[c]));
  r.residual = res;
  r.accept = res <= eta;
  return r;
}

SubcarrierVerdict classify_subcarrier(std::span<const cd> y_row, int b,
                                      const CodebookContext& ctx,
                                      const SystemParams& p) {
  SubcarrierVerdict v;
  auto y_tilde = y_row.subspan(0, static_cast<std::size_t>(p.C0));
  auto y_dot = y_row.subspan(static_cast<std::size_t>(p.C0),
                             static_cast<std::size_t>(p.C1));

  double e_dot = 0.0;
  for (const cd& y : y_dot) e_dot += std::norm(y);
  if (e_dot < p.eta) {
    v.kind = VerdictKind::Zeroton;
    v.residual_energy = e_dot;
    return v;
  }

  if (y_tilde[0] == cd(0.0, 0.0)) {
    v.kind = VerdictKind::Multiton;  // undetectable reference
    v.residual_energy = e_dot;
    return v;
  }
  v.theta_hat = std::arg(y_tilde[0]);

  CandidateDecode dec = decode_candidate(y_tilde, v.theta_hat, ctx, p, b);
  v.decode_tie = dec.tie;
  if (!dec.ok) {
    v.kind = VerdictKind::Multiton;
    v.residual_energy = e_dot;
    return v;
  }

  auto g_dot = encode_subframe1(dec.id, p.C1, ctx.public_seed);
  VerifyResult ver = verify_singleton(y_dot, g_dot, p.eta);
  v.residual_energy = ver.residual;
  if (!ver.accept) {
    v.kind = VerdictKind::Multiton;
    return v;
  }
  v.kind = VerdictKind::Singleton;
  v.id = dec.id;
  v.message = dec.message;
  v.A_dot = ver.A_dot;
  return v;
}

}  // namespace masim
