// codebook.hpp - deterministic device codewords.
//
// Every field of a codeword is a pure function of (public_seed, id, message,
// SystemParams), so the receiver regenerates codewords from decoded ids
// without side information. The keyed generator is the splitmix64/v1 walk
// from prng.hpp seeded by mix_key(public_seed, id, subframe tag); encoder
// and decoder must share that version.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "masim/params.hpp"

namespace masim {

struct CodebookContext {
  std::uint64_t public_seed = 0;
};

struct DeviceCodeword {
  std::uint64_t id = 0;
  std::uint64_t message = 0;
  std::vector<int> subcarriers;     // sorted, D distinct values in [0, B)
  std::vector<std::int8_t> g_tilde; // length C0, +/-1, g_tilde[0] = +1
  std::vector<std::int8_t> g_dot;   // length C1, +/-1
  std::vector<std::int8_t> chips;   // length C2, +/-1
};

// Keyed pseudorandom D-subset of {0, ..., B-1} for a device id.
std::vector<int> assign_subcarriers(std::uint64_t id, int B, int D,
                                    std::uint64_t public_seed);

// Subframe 0: reference symbol +1, then the ceil(log2(N*S)) bits of
// id*S + message (MSB first) repetition-coded at rate R (bit b maps to 1/R
// copies of (-1)^b), padded with +1 up to length C0.
std::vector<std::int8_t> encode_subframe0(std::uint64_t id, std::uint64_t message,
                                          std::uint64_t N, std::uint64_t S,
                                          double R, int C0);

struct Sub0Decode {
  bool ok = false;
  bool tie = false;   // some repetition block had a voting tie
  std::uint64_t id = 0;
  std::uint64_t message = 0;
};

// Majority vote per repetition block over the C0-1 post-reference symbols;
// rejects on a tie or when the decoded integer is >= N*S.
Sub0Decode decode_subframe0(std::span<const std::int8_t> hard_bits,
                            std::uint64_t N, std::uint64_t S, double R);

// Subframes 1 and 2: i.i.d. fair +/-1 sequences keyed by (seed, id).
std::vector<std::int8_t> encode_subframe1(std::uint64_t id, int C1,
                                          std::uint64_t public_seed);
std::vector<std::int8_t> encode_subframe2(std::uint64_t id, int C2,
                                          std::uint64_t public_seed);

DeviceCodeword make_codeword(const CodebookContext& ctx, const SystemParams& p,
                             std::uint64_t id, std::uint64_t message);

}  // namespace masim
