#include "masim/codebook.hpp"

#include <algorithm>
#include <stdexcept>

#include "masim/prng.hpp"

namespace masim {

namespace {
constexpr std::uint64_t kTagSubcarriers = 0x5343u;  // 'SC'
constexpr std::uint64_t kTagSubframe1 = 0x5331u;    // 'S1'
constexpr std::uint64_t kTagSubframe2 = 0x5332u;    // 'S2'

std::vector<std::int8_t> keyed_bpsk(std::uint64_t id, int len,
                                    std::uint64_t seed, std::uint64_t tag) {
  if (len < 0) throw std::invalid_argument("bpsk length must be >= 0");
  std::vector<std::int8_t> out(static_cast<std::size_t>(len));
  Prng g(mix_key(seed, id, tag));
  // 64 chips per generator word.
  std::uint64_t word = 0;
  int have = 0;
  for (int i = 0; i < len; ++i) {
    if (have == 0) {
      word = g.next_u64();
      have = 64;
    }
    out[static_cast<std::size_t>(i)] = (word & 1u) ? 1 : -1;
    word >>= 1;
    --have;
  }
  return out;
}
}  // namespace

std::vector<int> assign_subcarriers(std::uint64_t id, int B, int D,
                                    std::uint64_t public_seed) {
  if (D > B) throw std::invalid_argument("assign_subcarriers: D > B");
  if (D < 1) throw std::invalid_argument("assign_subcarriers: D < 1");
  std::vector<int> set;
  set.reserve(static_cast<std::size_t>(D));
  Prng g(mix_key(public_seed, id, kTagSubcarriers));
  // Floyd's subset sampling: uniform over D-subsets, no rejection loop.
  for (int j = B - D; j < B; ++j) {
    int t = static_cast<int>(g.below(static_cast<std::uint64_t>(j) + 1));
    if (std::find(set.begin(), set.end(), t) != set.end())
      set.push_back(j);
    else
      set.push_back(t);
  }
  std::sort(set.begin(), set.end());
  return set;
}

std::vector<std::int8_t> encode_subframe0(std::uint64_t id, std::uint64_t message,
                                          std::uint64_t N, std::uint64_t S,
                                          double R, int C0) {
  if (id >= N) throw std::invalid_argument("encode_subframe0: id >= N");
  if (message >= S) throw std::invalid_argument("encode_subframe0: message >= S");
  int rep = repetition_factor(R);
  int nbits = ceil_log2_u64(N * S);
  if (C0 < 1 + nbits * rep)
    throw std::invalid_argument("encode_subframe0: C0 too small for N*S at rate R");

  std::vector<std::int8_t> g(static_cast<std::size_t>(C0), 1);
  std::uint64_t v = id * S + message;
  std::size_t pos = 1;  // position 0 is the phase reference
  for (int b = nbits - 1; b >= 0; --b) {
    std::int8_t sym = ((v >> b) & 1u) ? -1 : 1;
    for (int r = 0; r < rep; ++r) g[pos++] = sym;
  }
  // remaining symbols stay +1 (padding)
  return g;
}

Sub0Decode decode_subframe0(std::span<const std::int8_t> hard_bits,
                            std::uint64_t N, std::uint64_t S, double R) {
  Sub0Decode out;
  int rep = repetition_factor(R);
  int nbits = ceil_log2_u64(N * S);
  if (hard_bits.size() < static_cast<std::size_t>(nbits * rep)) return out;

  std::uint64_t v = 0;
  for (int b = 0; b < nbits; ++b) {
    int sum = 0;
    for (int r = 0; r < rep; ++r)
      sum += hard_bits[static_cast<std::size_t>(b * rep + r)];
    if (sum == 0) {
      out.tie = true;
      return out;
    }
    v = (v << 1) | (sum < 0 ? 1u : 0u);
  }
  if (v >= N * S) return out;
  out.ok = true;
  out.id = v / S;
  out.message = v % S;
  return out;
}

std::vector<std::int8_t> encode_subframe1(std::uint64_t id, int C1,
                                          std::uint64_t public_seed) {
  return keyed_bpsk(id, C1, public_seed, kTagSubframe1);
}

std::vector<std::int8_t> encode_subframe2(std::uint64_t id, int C2,
                                          std::uint64_t public_seed) {
  return keyed_bpsk(id, C2, public_seed, kTagSubframe2);
}

DeviceCodeword make_codeword(const CodebookContext& ctx, const SystemParams& p,
                             std::uint64_t id, std::uint64_t message) {
  DeviceCodeword cw;
  cw.id = id;
  cw.message = message;
  cw.subcarriers = assign_subcarriers(id, p.B, p.D, ctx.public_seed);
  cw.g_tilde = encode_subframe0(id, message, p.N, p.S, p.R, p.C0);
  cw.g_dot = encode_subframe1(id, p.C1, ctx.public_seed);
  cw.chips = encode_subframe2(id, p.C2, ctx.public_seed);
  return cw;
}

}  // namespace masim
