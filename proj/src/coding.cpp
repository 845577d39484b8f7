#include "coding.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace bsr {

std::uint32_t crc_value(const BitVec& message, const CrcSpec& spec) {
  if (message.empty()) throw std::invalid_argument("crc: empty message");
  const std::uint32_t top = 1u << (spec.width - 1);
  const std::uint32_t mask = (spec.width == 32) ? 0xFFFFFFFFu : (1u << spec.width) - 1;
  std::uint32_t reg = 0;
  for (std::uint8_t bit : message) {
    const bool feedback = ((reg & top) != 0) != (bit != 0);
    reg = (reg << 1) & mask;
    if (feedback) reg ^= spec.poly & mask;
  }
  return reg;
}

BitVec crc_append(const BitVec& message, const CrcSpec& spec) {
  const std::uint32_t crc = crc_value(message, spec);
  BitVec out = message;
  for (unsigned i = 0; i < spec.width; ++i)
    out.push_back(static_cast<std::uint8_t>((crc >> (spec.width - 1 - i)) & 1u));
  return out;
}

bool crc_check(const BitVec& word, const CrcSpec& spec) {
  if (word.size() <= spec.width) throw std::invalid_argument("crc_check: word too short");
  const BitVec message(word.begin(), word.end() - spec.width);
  const std::uint32_t crc = crc_value(message, spec);
  for (unsigned i = 0; i < spec.width; ++i)
    if (word[word.size() - spec.width + i] != ((crc >> (spec.width - 1 - i)) & 1u)) return false;
  return true;
}

namespace {

unsigned parity_of(unsigned v) { return static_cast<unsigned>(std::popcount(v)) & 1u; }

// Register image for one step: current input in the top bit, past inputs
// below it, newest first. The next state drops the oldest input.
unsigned register_image(unsigned state, unsigned input, unsigned mem) {
  return (input << mem) | state;
}

}  // namespace

BitVec conv_encode(const BitVec& info, const ConvCode& code) {
  if (info.empty()) throw std::invalid_argument("conv_encode: empty input");
  const unsigned mem = code.constraint_length - 1;
  BitVec out;
  out.reserve(2 * (info.size() + code.tail_bits));
  unsigned state = 0;
  auto shift_in = [&](std::uint8_t b) {
    const unsigned full = register_image(state, b, mem);
    out.push_back(static_cast<std::uint8_t>(parity_of(full & code.generator_a)));
    out.push_back(static_cast<std::uint8_t>(parity_of(full & code.generator_b)));
    state = full >> 1;
  };
  for (std::uint8_t b : info) shift_in(b);
  for (unsigned i = 0; i < code.tail_bits; ++i) shift_in(0);
  return out;
}

SoftBit quantize_soft(double llr, double sigma_llr) {
  if (!std::isfinite(llr)) throw std::invalid_argument("quantize_soft: llr must be finite");
  if (!(sigma_llr > 0.0)) return SoftBit{static_cast<std::uint8_t>(llr >= 0.0 ? 8 : 7)};
  const double step = 6.0 * sigma_llr / 16.0;
  const double idx = std::floor((llr + 3.0 * sigma_llr) / step);
  const double clamped = std::clamp(idx, 0.0, 15.0);
  return SoftBit{static_cast<std::uint8_t>(clamped)};
}

SoftWord quantize_soft(std::span<const double> llrs) {
  double acc = 0.0;
  for (double v : llrs) acc += v * v;
  const double sigma = llrs.empty() ? 0.0 : std::sqrt(acc / static_cast<double>(llrs.size()));
  SoftWord out;
  out.reserve(llrs.size());
  for (double v : llrs) out.push_back(quantize_soft(v, sigma));
  return out;
}

BitVec viterbi_decode(const SoftWord& coded, const ConvCode& code) {
  const unsigned mem = code.constraint_length - 1;
  const std::size_t nstates = std::size_t{1} << mem;
  if (coded.size() % 2 != 0 || coded.size() / 2 <= code.tail_bits)
    throw std::invalid_argument("viterbi_decode: coded length inconsistent with the code");
  const std::size_t steps = coded.size() / 2;
  const std::size_t info_len = steps - code.tail_bits;

  std::vector<std::uint16_t> next(nstates * 2);
  std::vector<std::uint8_t> out_a(nstates * 2), out_b(nstates * 2);
  for (std::size_t s = 0; s < nstates; ++s) {
    for (unsigned b = 0; b < 2; ++b) {
      const unsigned full = register_image(static_cast<unsigned>(s), b, mem);
      out_a[s * 2 + b] = static_cast<std::uint8_t>(parity_of(full & code.generator_a));
      out_b[s * 2 + b] = static_cast<std::uint8_t>(parity_of(full & code.generator_b));
      next[s * 2 + b] = static_cast<std::uint16_t>(full >> 1);
    }
  }

  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  std::vector<double> metric(nstates, kNegInf);
  metric[0] = 0.0;
  std::vector<double> next_metric(nstates);
  std::vector<std::uint8_t> chosen_bit(steps * nstates);
  std::vector<std::uint16_t> chosen_prev(steps * nstates);

  for (std::size_t t = 0; t < steps; ++t) {
    const double la = coded[2 * t].level;
    const double lb = coded[2 * t + 1].level;
    std::fill(next_metric.begin(), next_metric.end(), kNegInf);
    for (std::size_t s = 0; s < nstates; ++s) {
      const double base = metric[s];
      if (base == kNegInf) continue;
      for (unsigned b = 0; b < 2; ++b) {
        const double branch = (out_a[s * 2 + b] ? la : 15.0 - la) +
                              (out_b[s * 2 + b] ? lb : 15.0 - lb);
        const std::size_t ns = next[s * 2 + b];
        const double cand = base + branch;
        if (cand > next_metric[ns]) {
          next_metric[ns] = cand;
          chosen_bit[t * nstates + ns] = static_cast<std::uint8_t>(b);
          chosen_prev[t * nstates + ns] = static_cast<std::uint16_t>(s);
        }
      }
    }
    metric.swap(next_metric);
  }

  // Zero-tail termination: trace back from state 0.
  BitVec bits(steps);
  std::size_t state = 0;
  for (std::size_t t = steps; t-- > 0;) {
    bits[t] = chosen_bit[t * nstates + state];
    state = chosen_prev[t * nstates + state];
  }
  bits.resize(info_len);
  return bits;
}

std::vector<std::uint8_t> pack_bits_msb_first(const BitVec& bits) {
  std::vector<std::uint8_t> out((bits.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) out[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
  return out;
}

BitVec unpack_bits_msb_first(std::span<const std::uint8_t> octets, std::size_t bit_count) {
  if (bit_count > octets.size() * 8)
    throw std::invalid_argument("unpack_bits_msb_first: not enough octets");
  BitVec out(bit_count);
  for (std::size_t i = 0; i < bit_count; ++i)
    out[i] = (octets[i / 8] >> (7 - i % 8)) & 1u;
  return out;
}

}  // namespace bsr
