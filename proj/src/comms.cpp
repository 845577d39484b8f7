#include "comms.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace bsr {

namespace {

constexpr double kInvSqrt2 = std::numbers::inv_sqrt2;

}  // namespace

std::size_t payload_bit_count(std::size_t block_len, const CodecConfig& codec) {
  const std::size_t overhead = codec.conv.tail_bits + codec.crc.width;
  if (block_len <= overhead)
    throw std::invalid_argument("payload_bit_count: block too short for tail and CRC");
  return block_len - overhead;
}

void CommsParams::validate() const {
  if (user_count < 1) throw std::invalid_argument("comms params: N >= 1 required");
  if (active_count < 1 || active_count > user_count)
    throw std::invalid_argument("comms params: 1 <= N_a <= N required");
  if (block_len < 31)
    throw std::invalid_argument("comms params: d must exceed the 30 coding overhead bits");
  if (antennas < 1) throw std::invalid_argument("comms params: M_ant >= 1 required");
  if (symbol_time < block_len)
    throw std::invalid_argument("comms params: T >= d required (tall or square precoder)");
  if (active_count * block_len >= antennas * symbol_time)
    throw std::invalid_argument("comms params: N_a*d < M_ant*T required");
  if (!(snr >= 0.0)) throw std::invalid_argument("comms params: rho0 >= 0 required");
}

ComplexMatrix kron_block(const ComplexMatrix& precoder, const cvec& channel) {
  const std::size_t t = precoder.rows();
  const std::size_t d = precoder.cols();
  const std::size_t mant = channel.size();
  ComplexMatrix out(t * mant, d);
  for (std::size_t ti = 0; ti < t; ++ti)
    for (std::size_t a = 0; a < mant; ++a)
      for (std::size_t j = 0; j < d; ++j) out(ti * mant + a, j) = precoder(ti, j) * channel[a];
  return out;
}

ComplexMatrix CommsInstance::user_block(std::size_t user) const {
  return kron_block(precoders.at(user), channels.at(user));
}

cvec CommsInstance::full_signal() const {
  cvec s(params.user_count * params.block_len, cxd{});
  for (std::size_t i = 0; i < active.size(); ++i)
    std::copy(symbols[i].begin(), symbols[i].end(), s.begin() + active[i] * params.block_len);
  return s;
}

namespace {

// out += sqrt(rho0) * (P (x) h) * x, through the Kronecker structure.
void add_scaled_block_times(cvec& out, const ComplexMatrix& precoder, const cvec& channel,
                            std::span<const cxd> x, double scale, double sign) {
  const std::size_t t = precoder.rows();
  const std::size_t mant = channel.size();
  cvec w(t);
  for (std::size_t ti = 0; ti < t; ++ti) {
    cxd acc{};
    const auto row = precoder.row(ti);
    for (std::size_t j = 0; j < x.size(); ++j) acc += row[j] * x[j];
    w[ti] = acc * scale * sign;
  }
  for (std::size_t ti = 0; ti < t; ++ti)
    for (std::size_t a = 0; a < mant; ++a) out[ti * mant + a] += w[ti] * channel[a];
}

}  // namespace

CommsInstance generate_comms_instance(const CommsParams& params, Rng& rng,
                                      const CodecConfig& codec) {
  params.validate();
  const std::size_t n = params.user_count;
  const std::size_t d = params.block_len;
  const std::size_t rows = params.antennas * params.symbol_time;
  const std::size_t info_len = payload_bit_count(d, codec);

  CommsInstance inst;
  inst.params = params;
  inst.codec = codec;
  inst.precoders.reserve(n);
  inst.channels.reserve(n);
  const double pvar = 1.0 / static_cast<double>(params.symbol_time);
  for (std::size_t u = 0; u < n; ++u) {
    ComplexMatrix p(params.symbol_time, d);
    for (cxd& e : p.entries()) e = rng.complex_gaussian(pvar);
    inst.precoders.push_back(std::move(p));
    inst.channels.push_back(sample_complex_gaussian(rng, 1.0, params.antennas));
  }

  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < params.active_count; ++i)
    std::swap(pool[i], pool[i + rng.below(n - i)]);
  inst.active.assign(pool.begin(), pool.begin() + params.active_count);
  std::sort(inst.active.begin(), inst.active.end());

  inst.noise = sample_complex_gaussian(rng, 1.0, rows);
  inst.observation = inst.noise;
  const double amp = std::sqrt(params.snr);
  for (std::size_t u : inst.active) {
    BitVec payload(info_len);
    for (std::uint8_t& b : payload) b = static_cast<std::uint8_t>(rng.next_u64() & 1u);
    const BitVec coded = conv_encode(crc_append(payload, codec.crc), codec.conv);
    cvec sym = qpsk_modulate(coded);
    add_scaled_block_times(inst.observation, inst.precoders[u], inst.channels[u], sym, amp, 1.0);
    inst.payloads.push_back(std::move(payload));
    inst.symbols.push_back(std::move(sym));
  }
  return inst;
}

CommsInstance generate_comms_instance(const CommsParams& params) {
  Rng rng(params.seed);
  return generate_comms_instance(params, rng);
}

cvec qpsk_modulate(const BitVec& bits) {
  if (bits.size() % 2 != 0) throw std::invalid_argument("qpsk_modulate: bit count must be even");
  cvec out(bits.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double re = bits[2 * i] ? -kInvSqrt2 : kInvSqrt2;
    const double im = bits[2 * i + 1] ? -kInvSqrt2 : kInvSqrt2;
    out[i] = {re, im};
  }
  return out;
}

std::vector<double> qpsk_soft_demodulate(const cvec& symbol_estimates,
                                         double noise_var_estimate) {
  if (!(noise_var_estimate > 0.0))
    throw std::invalid_argument("qpsk_soft_demodulate: noise variance must be positive");
  std::vector<double> llrs(symbol_estimates.size() * 2);
  const double scale = 2.0 * std::sqrt(2.0) / noise_var_estimate;
  for (std::size_t i = 0; i < symbol_estimates.size(); ++i) {
    llrs[2 * i] = -scale * symbol_estimates[i].real();
    llrs[2 * i + 1] = -scale * symbol_estimates[i].imag();
  }
  return llrs;
}

BitVec qpsk_hard_decisions(const cvec& symbol_estimates) {
  BitVec bits(symbol_estimates.size() * 2);
  for (std::size_t i = 0; i < symbol_estimates.size(); ++i) {
    bits[2 * i] = symbol_estimates[i].real() < 0.0 ? 1 : 0;
    bits[2 * i + 1] = symbol_estimates[i].imag() < 0.0 ? 1 : 0;
  }
  return bits;
}

cvec qpsk_hard_symbols(const cvec& symbol_estimates) {
  cvec out(symbol_estimates.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double re = symbol_estimates[i].real() < 0.0 ? -kInvSqrt2 : kInvSqrt2;
    const double im = symbol_estimates[i].imag() < 0.0 ? -kInvSqrt2 : kInvSqrt2;
    out[i] = {re, im};
  }
  return out;
}

std::size_t select_user(const CommsInstance& inst, const cvec& residual,
                        const std::vector<bool>& excluded) {
  const CommsParams& p = inst.params;
  if (excluded.size() != p.user_count)
    throw std::invalid_argument("select_user: exclusion mask size mismatch");
  const std::size_t t = p.symbol_time;
  const std::size_t mant = p.antennas;
  double best = -1.0;
  std::size_t best_user = p.user_count;
  cvec c(t);
  for (std::size_t u = 0; u < p.user_count; ++u) {
    if (excluded[u]) continue;
    const cvec& h = inst.channels[u];
    for (std::size_t ti = 0; ti < t; ++ti) {
      cxd acc{};
      for (std::size_t a = 0; a < mant; ++a) acc += std::conj(h[a]) * residual[ti * mant + a];
      c[ti] = acc;
    }
    // ||B_u^H r||^2 = ||P_u^H c||^2 with c_t = h^H r_t.
    const cvec proj = inst.precoders[u].multiply_adjoint(c);
    const double stat = norm_sq(proj);
    if (stat > best) {
      best = stat;
      best_user = u;
    }
  }
  if (best_user == p.user_count) throw ExhaustionError();
  return best_user;
}

std::size_t default_icbomp_guard(const CommsParams& params) {
  return std::min<std::size_t>(30, (params.antennas * params.symbol_time - 1) / params.block_len);
}

namespace {

// Columns of sqrt(rho0) * (P (x) h), appended one at a time.
void append_scaled_block(IncrementalQr& qr, const ComplexMatrix& precoder, const cvec& channel,
                         double amp) {
  const std::size_t t = precoder.rows();
  const std::size_t mant = channel.size();
  cvec col(t * mant);
  for (std::size_t j = 0; j < precoder.cols(); ++j) {
    for (std::size_t ti = 0; ti < t; ++ti) {
      const cxd pij = precoder(ti, j) * amp;
      for (std::size_t a = 0; a < mant; ++a) col[ti * mant + a] = pij * channel[a];
    }
    qr.append_column(col);
  }
}

}  // namespace

IcbompResult run_icbomp(const CommsInstance& instance, const StoppingRule& rule,
                        std::size_t max_iter_guard) {
  const CommsParams& p = instance.params;
  const std::size_t d = p.block_len;
  const std::size_t rows = p.antennas * p.symbol_time;
  if (max_iter_guard * d >= rows)
    throw std::invalid_argument("run_icbomp: guard * d must stay below M_ant*T");
  const double amp = std::sqrt(p.snr);
  const std::size_t info_len = payload_bit_count(d, instance.codec);

  IcbompResult result;
  result.stop_reason = rule_tag(rule);

  cvec y_work = instance.observation;
  // Residual energies at round-off level are an exact cancellation.
  const double dust = 1e-24 * norm_sq(instance.observation);
  std::vector<std::size_t> lambda;          // detected, not yet decoded
  std::vector<bool> excluded(p.user_count, false);
  cvec coef;                                // aligned with lambda, d entries each
  cvec residual = y_work;
  cvec estimate_prev(p.user_count * d, cxd{});
  std::vector<std::pair<std::size_t, cvec>> decoded_symbols;

  IncrementalQr qr(rows);
  auto rebuild_qr = [&]() {
    qr = IncrementalQr(rows);
    for (std::size_t u : lambda)
      append_scaled_block(qr, instance.precoders[u], instance.channels[u], amp);
  };
  auto compute_residual = [&]() {
    residual = y_work;
    for (std::size_t i = 0; i < lambda.size(); ++i) {
      const std::size_t u = lambda[i];
      add_scaled_block_times(residual, instance.precoders[u], instance.channels[u],
                             {coef.data() + i * d, d}, amp, -1.0);
    }
  };

  for (std::size_t k = 1; k <= max_iter_guard; ++k) {
    std::size_t user;
    try {
      user = select_user(instance, residual, excluded);
    } catch (const ExhaustionError&) {
      result.selection_exhausted = true;
      break;
    }
    excluded[user] = true;
    lambda.push_back(user);
    append_scaled_block(qr, instance.precoders[user], instance.channels[user], amp);
    coef = qr.solve(y_work);
    compute_residual();
    double energy = norm_sq(residual);

    // Decode pass over the detected set; successful packets are re-encoded,
    // cancelled from the working observation and leave Lambda.
    const double noise_var_est = energy / static_cast<double>(rows - lambda.size() * d);
    std::vector<std::size_t> passed;
    for (std::size_t i = 0; i < lambda.size(); ++i) {
      const std::size_t u = lambda[i];
      const cvec est(coef.begin() + i * d, coef.begin() + (i + 1) * d);
      const std::vector<double> llrs = qpsk_soft_demodulate(est, noise_var_est);
      const BitVec word = viterbi_decode(quantize_soft(llrs), instance.codec.conv);
      if (!crc_check(word, instance.codec.crc)) continue;
      const cvec remod = qpsk_modulate(conv_encode(word, instance.codec.conv));
      add_scaled_block_times(y_work, instance.precoders[u], instance.channels[u], remod, amp,
                             -1.0);
      result.decoded_users.push_back(u);
      result.decoded_payloads.emplace_back(word.begin(), word.begin() + info_len);
      decoded_symbols.emplace_back(u, remod);
      passed.push_back(u);
    }
    if (!passed.empty()) {
      std::erase_if(lambda, [&](std::size_t u) {
        return std::find(passed.begin(), passed.end(), u) != passed.end();
      });
      rebuild_qr();
      if (!lambda.empty()) {
        coef = qr.solve(y_work);
      } else {
        coef.clear();
      }
      compute_residual();
      energy = norm_sq(residual);
    }
    if (energy <= dust) energy = 0.0;

    result.energy_trace.push_back(energy);
    result.detected_count_trace.push_back(lambda.size());
    result.iterations = k;

    cvec estimate_full(p.user_count * d, cxd{});
    for (const auto& [u, sym] : decoded_symbols)
      std::copy(sym.begin(), sym.end(), estimate_full.begin() + u * d);
    for (std::size_t i = 0; i < lambda.size(); ++i)
      std::copy(coef.begin() + i * d, coef.begin() + (i + 1) * d,
                estimate_full.begin() + lambda[i] * d);

    const StopContext ctx =
        icbomp_stop_context(p.antennas, p.symbol_time, d, p.snr, lambda.size());
    const StopDecision decision =
        should_stop(rule, k, energy, estimate_prev, estimate_full, ctx);
    if (decision.threshold) result.threshold_trace.push_back(*decision.threshold);
    estimate_prev = std::move(estimate_full);
    if (decision.stop) {
      result.estimate_full = estimate_prev;
      break;
    }
    if (k == max_iter_guard) result.stopped_by_guard = true;
  }
  if (result.estimate_full.empty()) result.estimate_full = estimate_prev;

  result.working_observation = std::move(y_work);
  result.detected_not_decoded = lambda;
  result.symbol_decisions = decoded_symbols;
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    const cvec est(coef.begin() + i * d, coef.begin() + (i + 1) * d);
    result.symbol_decisions.emplace_back(lambda[i], qpsk_hard_symbols(est));
  }
  return result;
}

IcbompResult run_icbomp(const CommsInstance& instance, const StoppingRule& rule) {
  return run_icbomp(instance, rule, default_icbomp_guard(instance.params));
}

}  // namespace bsr
