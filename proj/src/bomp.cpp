#include "bomp.hpp"

#include <algorithm>

namespace bsr {

std::size_t select_block(const ComplexMatrix& sensing, const cvec& residual,
                         const std::vector<bool>& excluded, std::size_t block_len) {
  const std::size_t block_count = sensing.cols() / block_len;
  if (excluded.size() != block_count)
    throw std::invalid_argument("select_block: exclusion mask size mismatch");

  const cvec corr = sensing.multiply_adjoint(residual);
  double best = -1.0;
  std::size_t best_block = block_count;
  for (std::size_t j = 0; j < block_count; ++j) {
    if (excluded[j]) continue;
    double acc = 0.0;
    for (std::size_t i = 0; i < block_len; ++i) acc += std::norm(corr[j * block_len + i]);
    if (acc > best) {
      best = acc;
      best_block = j;
    }
  }
  if (best_block == block_count) throw ExhaustionError();
  return best_block;
}

std::size_t default_guard(std::size_t measurements, std::size_t block_len) {
  return std::min<std::size_t>(30, (measurements - 1) / block_len);
}

RecoveryResult run_bomp(const ProblemInstance& instance, const StoppingRule& rule,
                        std::size_t max_iter_guard, const IterationObserver& observer) {
  const ModelParams& p = instance.params;
  const std::size_t d = p.block_len;
  const std::size_t m = p.measurements;
  if (max_iter_guard * d >= m)
    throw std::invalid_argument("run_bomp: guard * d must stay below M");

  RecoveryResult result;
  result.stop_reason = rule_tag(rule);
  result.estimate_full.assign(p.block_count * d, cxd{});

  IterationState st;
  st.residual = instance.observation;
  cvec estimate_prev(p.block_count * d, cxd{});
  std::vector<bool> picked(p.block_count, false);
  IncrementalQr qr(m);
  // Residual energies at round-off level are an exact cancellation.
  const double dust = 1e-24 * norm_sq(instance.observation);

  for (std::size_t k = 1; k <= max_iter_guard; ++k) {
    const std::size_t j = select_block(instance.sensing, st.residual, picked, d);
    picked[j] = true;
    st.detected.push_back(j);
    qr.append_columns(block_columns(instance.sensing, j, d));
    st.estimate = qr.solve(instance.observation);

    st.residual = instance.observation;
    for (std::size_t i = 0; i < st.detected.size(); ++i) {
      const std::size_t blk = st.detected[i];
      for (std::size_t r = 0; r < m; ++r) {
        cxd acc{};
        for (std::size_t c = 0; c < d; ++c)
          acc += instance.sensing(r, blk * d + c) * st.estimate[i * d + c];
        st.residual[r] -= acc;
      }
    }
    st.iteration = k;
    st.energy = norm_sq(st.residual);
    if (st.energy <= dust) st.energy = 0.0;
    if (observer) observer(st);

    result.energy_trace.push_back(st.energy);
    result.iterations = k;
    result.detected = st.detected;

    cvec estimate_full(p.block_count * d, cxd{});
    for (std::size_t i = 0; i < st.detected.size(); ++i)
      for (std::size_t c = 0; c < d; ++c)
        estimate_full[st.detected[i] * d + c] = st.estimate[i * d + c];

    const StopContext ctx = bomp_stop_context(m, d, p.noise_var, k);
    const StopDecision decision =
        should_stop(rule, k, st.energy, estimate_prev, estimate_full, ctx);
    if (decision.threshold) result.threshold_trace.push_back(*decision.threshold);
    estimate_prev = std::move(estimate_full);
    if (decision.stop) {
      result.estimate_full = estimate_prev;
      return result;
    }
  }
  result.stopped_by_guard = max_iter_guard > 0;
  result.estimate_full = estimate_prev;
  return result;
}

RecoveryResult run_bomp(const ProblemInstance& instance, const StoppingRule& rule) {
  return run_bomp(instance, rule,
                  default_guard(instance.params.measurements, instance.params.block_len));
}

}  // namespace bsr
