#include "stopping.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>

namespace bsr {

void ThresholdParams::validate() const {
  if (!(missed_prob > 0.0 && missed_prob < 1.0))
    throw std::invalid_argument("threshold params: 0 < p_m < 1 required");
  if (!(false_prob > 0.0 && false_prob < 1.0))
    throw std::invalid_argument("threshold params: 0 < p_f < 1 required");
  if (assumed_remaining < 1)
    throw std::invalid_argument("threshold params: n_a_assumed >= 1 required");
}

namespace {

void require_overdetermined(std::size_t rows, std::size_t cols) {
  if (cols >= rows) throw DegenerateRegressionError(cols, rows);
}

// Shared moment arithmetic; `per_block` is d/M for BOMP and snr*d/T for the
// uplink scenario.
double mean_core(std::size_t rows, std::size_t cols, double per_block, std::size_t remaining,
                 double noise_var) {
  const double free_dims = static_cast<double>(rows - cols);
  return free_dims * (noise_var + static_cast<double>(remaining) * per_block);
}

double variance_core(std::size_t rows, std::size_t cols, double per_block, std::size_t remaining,
                     double noise_var) {
  const double free_dims = static_cast<double>(rows - cols);
  const double level = noise_var + static_cast<double>(remaining) * per_block;
  return free_dims * free_dims / static_cast<double>(rows) * level * level;
}

// Quantile of the residual-energy law with mean `mu` modeled over `rows`
// complex dimensions as chi-square(2*rows) scaled to per-entry variance mu/rows.
double chi_square_quantile(double mu, std::size_t rows, double p) {
  boost::math::chi_squared_distribution<double> chi(2.0 * static_cast<double>(rows));
  const double per_entry = mu / static_cast<double>(rows);
  return 0.5 * per_entry * boost::math::quantile(chi, p);
}

double missed_core(std::size_t rows, std::size_t cols, double per_block,
                   const ThresholdParams& tp, double noise_var) {
  tp.validate();
  require_overdetermined(rows, cols);
  const double mu = mean_core(rows, cols, per_block, tp.assumed_remaining, noise_var);
  if (tp.exact_chi_square) return chi_square_quantile(mu, rows, tp.missed_prob);
  return mu * (1.0 + std_normal_inv_cdf(tp.missed_prob) / std::sqrt(static_cast<double>(rows)));
}

double false_core(std::size_t rows, std::size_t cols, const ThresholdParams& tp,
                  double noise_var) {
  tp.validate();
  require_overdetermined(rows, cols);
  const double mu = mean_core(rows, cols, 0.0, 0, noise_var);
  if (tp.exact_chi_square) return chi_square_quantile(mu, rows, 1.0 - tp.false_prob);
  return mu * (1.0 - std_normal_inv_cdf(tp.false_prob) / std::sqrt(static_cast<double>(rows)));
}

}  // namespace

double residual_mean(std::size_t measurements, std::size_t cols_in_ls, std::size_t block_len,
                     std::size_t remaining, double noise_var) {
  require_overdetermined(measurements, cols_in_ls);
  const double per_block = static_cast<double>(block_len) / static_cast<double>(measurements);
  return mean_core(measurements, cols_in_ls, per_block, remaining, noise_var);
}

double residual_variance(std::size_t measurements, std::size_t cols_in_ls, std::size_t block_len,
                         std::size_t remaining, double noise_var) {
  require_overdetermined(measurements, cols_in_ls);
  const double per_block = static_cast<double>(block_len) / static_cast<double>(measurements);
  return variance_core(measurements, cols_in_ls, per_block, remaining, noise_var);
}

double threshold_missed(std::size_t measurements, std::size_t cols_in_ls, std::size_t block_len,
                        const ThresholdParams& tp, double noise_var) {
  const double per_block = static_cast<double>(block_len) / static_cast<double>(measurements);
  return missed_core(measurements, cols_in_ls, per_block, tp, noise_var);
}

double threshold_false(std::size_t measurements, std::size_t cols_in_ls,
                       const ThresholdParams& tp, double noise_var) {
  return false_core(measurements, cols_in_ls, tp, noise_var);
}

double derived_threshold(std::size_t measurements, std::size_t cols_in_ls, std::size_t block_len,
                         const ThresholdParams& tp, double noise_var) {
  const double eta1 = threshold_missed(measurements, cols_in_ls, block_len, tp, noise_var);
  const double eta0 = threshold_false(measurements, cols_in_ls, tp, noise_var);
  return std::max(std::min(eta1, eta0), 0.0);
}

ResidualStats icbomp_stats(std::size_t antennas, std::size_t symbol_time, std::size_t detected,
                           std::size_t block_len, std::size_t remaining, double snr) {
  const std::size_t rows = antennas * symbol_time;
  const std::size_t cols = detected * block_len;
  require_overdetermined(rows, cols);
  const double per_block = snr * static_cast<double>(block_len) / static_cast<double>(symbol_time);
  ResidualStats stats;
  stats.mean = mean_core(rows, cols, per_block, remaining, 1.0);
  stats.variance = variance_core(rows, cols, per_block, remaining, 1.0);
  stats.per_entry_variance = stats.mean / static_cast<double>(rows);
  return stats;
}

double icbomp_threshold(std::size_t antennas, std::size_t symbol_time, std::size_t detected,
                        std::size_t block_len, const ThresholdParams& tp, double snr) {
  const std::size_t rows = antennas * symbol_time;
  const std::size_t cols = detected * block_len;
  const double per_block = snr * static_cast<double>(block_len) / static_cast<double>(symbol_time);
  const double eta1 = missed_core(rows, cols, per_block, tp, 1.0);
  const double eta0 = false_core(rows, cols, tp, 1.0);
  return std::max(std::min(eta1, eta0), 0.0);
}

RuleTag rule_tag(const StoppingRule& rule) {
  return std::visit(
      [](const auto& r) {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, DerivedThresholdRule>) return RuleTag::derived_threshold;
        if constexpr (std::is_same_v<T, RelativeChangeRule>) return RuleTag::relative_change;
        if constexpr (std::is_same_v<T, ResidualEnergyRule>) return RuleTag::residual_energy;
        if constexpr (std::is_same_v<T, MaxIterationsRule>) return RuleTag::max_iterations;
      },
      rule);
}

const char* rule_tag_name(RuleTag tag) {
  switch (tag) {
    case RuleTag::derived_threshold: return "derived";
    case RuleTag::relative_change: return "relchange";
    case RuleTag::residual_energy: return "energy";
    case RuleTag::max_iterations: return "maxiter";
  }
  return "?";
}

StopContext bomp_stop_context(std::size_t measurements, std::size_t block_len, double noise_var,
                              std::size_t iteration) {
  StopContext ctx;
  ctx.scenario = StopContext::Scenario::bomp;
  ctx.rows = measurements;
  ctx.cols_in_ls = iteration * block_len;
  ctx.block_len = block_len;
  ctx.noise_var = noise_var;
  return ctx;
}

StopContext icbomp_stop_context(std::size_t antennas, std::size_t symbol_time,
                                std::size_t block_len, double snr, std::size_t detected) {
  StopContext ctx;
  ctx.scenario = StopContext::Scenario::icbomp;
  ctx.rows = antennas * symbol_time;
  ctx.cols_in_ls = detected * block_len;
  ctx.block_len = block_len;
  ctx.noise_var = 1.0;
  ctx.snr = snr;
  ctx.symbol_time = symbol_time;
  return ctx;
}

namespace {

double context_threshold(const ThresholdParams& tp, const StopContext& ctx) {
  if (ctx.scenario == StopContext::Scenario::bomp)
    return derived_threshold(ctx.rows, ctx.cols_in_ls, ctx.block_len, tp, ctx.noise_var);
  const std::size_t antennas = ctx.rows / ctx.symbol_time;
  const std::size_t detected = ctx.cols_in_ls / ctx.block_len;
  return icbomp_threshold(antennas, ctx.symbol_time, detected, ctx.block_len, tp, ctx.snr);
}

}  // namespace

StopDecision should_stop(const StoppingRule& rule, std::size_t iteration, double residual_energy,
                         const cvec& previous_estimate, const cvec& current_estimate,
                         const StopContext& ctx) {
  StopDecision decision;
  decision.rule = rule_tag(rule);
  std::visit(
      [&](const auto& r) {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, DerivedThresholdRule>) {
          const double eta = context_threshold(r.params, ctx);
          decision.threshold = eta;
          decision.stop = residual_energy <= eta;
        } else if constexpr (std::is_same_v<T, RelativeChangeRule>) {
          if (iteration < 2) return;  // no predecessor at the first iteration
          if (previous_estimate.size() != current_estimate.size())
            throw std::invalid_argument("should_stop: estimates must be aligned");
          const double denom = norm(previous_estimate);
          if (denom == 0.0) {
            decision.zero_norm_flagged = true;
            return;
          }
          double diff = 0.0;
          for (std::size_t i = 0; i < current_estimate.size(); ++i)
            diff += std::norm(current_estimate[i] - previous_estimate[i]);
          decision.stop = std::sqrt(diff) / denom < r.epsilon;
        } else if constexpr (std::is_same_v<T, ResidualEnergyRule>) {
          decision.threshold = r.epsilon;
          decision.stop = residual_energy < r.epsilon;
        } else if constexpr (std::is_same_v<T, MaxIterationsRule>) {
          decision.stop = iteration >= r.limit;
        }
      },
      rule);
  return decision;
}

}  // namespace bsr
