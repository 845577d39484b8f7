#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "coding.hpp"
#include "numerics.hpp"
#include "stopping.hpp"

namespace bsr {

/// Channel coding chain used by the uplink scenario.
struct CodecConfig {
  ConvCode conv;
  CrcSpec crc;
};

/// Information bits carried by one block of `block_len` QPSK symbols:
/// 2*d coded bits = 2*(L + tail), L = d - tail info+crc bits.
std::size_t payload_bit_count(std::size_t block_len, const CodecConfig& codec = {});

struct CommsParams {
  std::size_t user_count = 0;   // N
  std::size_t active_count = 0; // N_a
  std::size_t block_len = 0;    // d, symbols per user block
  std::size_t antennas = 0;     // M_ant
  std::size_t symbol_time = 0;  // T
  double snr = 1.0;             // rho_0, linear
  std::uint64_t seed = 0;

  void validate() const;
};

/// One uplink realization: observation = sqrt(rho_0) * sum_n B_n s_n + z,
/// with B_n = P_n (x) h_n and coded QPSK payloads on the active users.
struct CommsInstance {
  CommsParams params;
  CodecConfig codec;
  std::vector<ComplexMatrix> precoders;  // P_n, T x d, entries CN(0, 1/T)
  std::vector<cvec> channels;            // h_n, length M_ant, entries CN(0, 1)
  std::vector<std::size_t> active;       // sorted user indices
  std::vector<BitVec> payloads;          // per active user
  std::vector<cvec> symbols;             // per active user, d unit-energy symbols
  cvec noise;                            // z, length M_ant * T
  cvec observation;                      // y

  /// Materialized B_n = P_n (x) h_n, (M_ant*T) x d.
  ComplexMatrix user_block(std::size_t user) const;
  /// The N*d transmitted symbol vector, zeros on inactive users.
  cvec full_signal() const;
};

/// Kronecker product of a T x d precoder with an M_ant channel column.
ComplexMatrix kron_block(const ComplexMatrix& precoder, const cvec& channel);

CommsInstance generate_comms_instance(const CommsParams& params, Rng& rng,
                                      const CodecConfig& codec = {});
CommsInstance generate_comms_instance(const CommsParams& params);

/// Gray-mapped unit-energy QPSK, two bits per symbol: first bit sets the sign
/// of the real part, second of the imaginary part; 0 maps to +.
cvec qpsk_modulate(const BitVec& bits);
/// Per-bit log-likelihood ratios log P(bit=1)/P(bit=0); its sign is the
/// hard decision.
std::vector<double> qpsk_soft_demodulate(const cvec& symbol_estimates, double noise_var_estimate);
BitVec qpsk_hard_decisions(const cvec& symbol_estimates);
/// Nearest constellation points.
cvec qpsk_hard_symbols(const cvec& symbol_estimates);

struct IcbompResult {
  std::vector<std::size_t> decoded_users;
  std::vector<BitVec> decoded_payloads;             // aligned with decoded_users
  std::vector<std::size_t> detected_not_decoded;    // final Lambda, selection order
  std::size_t iterations = 0;
  std::vector<double> energy_trace;                 // E_k after step 5
  std::vector<double> threshold_trace;              // eta per iteration (energy rules)
  std::vector<std::size_t> detected_count_trace;    // l = |Lambda| after step 5
  RuleTag stop_reason = RuleTag::max_iterations;
  bool stopped_by_guard = false;
  bool selection_exhausted = false;
  /// Per-user final symbol decisions: re-modulated codewords for decoded
  /// users, hard decisions for detected-but-undecoded users.
  std::vector<std::pair<std::size_t, cvec>> symbol_decisions;
  cvec estimate_full;                               // N*d symbol-domain estimate
  cvec working_observation;                         // y after all cancellations
};

/// Correlation selection over users not yet detected or decoded, computed
/// through the Kronecker structure; same argmax as select_block on the
/// materialized matrix.
std::size_t select_user(const CommsInstance& inst, const cvec& residual,
                        const std::vector<bool>& excluded);

/// min(30, (M_ant*T - 1) / d).
std::size_t default_icbomp_guard(const CommsParams& params);

IcbompResult run_icbomp(const CommsInstance& instance, const StoppingRule& rule,
                        std::size_t max_iter_guard);
IcbompResult run_icbomp(const CommsInstance& instance, const StoppingRule& rule);

}  // namespace bsr
