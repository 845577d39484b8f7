#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace bsr {

using BitVec = std::vector<std::uint8_t>;  // one bit per element, values 0/1

/// Rate-1/2 convolutional code, zero-tail terminated.
struct ConvCode {
  unsigned constraint_length = 7;
  unsigned generator_a = 0133;  // octal
  unsigned generator_b = 0171;  // octal
  unsigned tail_bits = 6;
};

/// 24-bit CRC, init 0, no reflection, xor-out 0, MSB-first.
struct CrcSpec {
  unsigned width = 24;
  std::uint32_t poly = 0x864CFB;
};

/// Quantized coded-bit reliability: 16 levels, 15 = strongest one,
/// 0 = strongest zero; the hard decision is the upper half.
struct SoftBit {
  std::uint8_t level = 8;
  bool hard() const noexcept { return level >= 8; }
};
using SoftWord = std::vector<SoftBit>;

std::uint32_t crc_value(const BitVec& message, const CrcSpec& spec = {});
/// Message plus 24 check bits.
BitVec crc_append(const BitVec& message, const CrcSpec& spec = {});
/// True iff the appended word has remainder zero.
bool crc_check(const BitVec& word, const CrcSpec& spec = {});

/// 2*(L + tail) coded bits for L info bits, alternating generator outputs.
BitVec conv_encode(const BitVec& info, const ConvCode& code = {});

/// Mid-rise uniform quantizer clipped at +-3 sigma. llr > 0 means "one".
SoftBit quantize_soft(double llr, double sigma_llr);
/// Per-packet variant: sigma from the RMS of the packet's values.
SoftWord quantize_soft(std::span<const double> llrs);

/// Soft-decision Viterbi with traceback to the zero tail state; returns the
/// L info bits (tail stripped).
BitVec viterbi_decode(const SoftWord& coded, const ConvCode& code = {});

/// Fixture packing: most-significant-bit-first octets, zero padded.
std::vector<std::uint8_t> pack_bits_msb_first(const BitVec& bits);
BitVec unpack_bits_msb_first(std::span<const std::uint8_t> octets, std::size_t bit_count);

}  // namespace bsr
