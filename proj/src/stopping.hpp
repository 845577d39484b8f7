#pragma once

#include <cstddef>
#include <optional>
#include <variant>

#include "numerics.hpp"

namespace bsr {

/// Model moments of the residual energy after a least-squares fit over
/// `cols_in_ls` columns when `remaining` supporting blocks are undetected.
struct ResidualStats {
  double mean = 0.0;                // mu_k
  double variance = 0.0;            // sigma_k^2
  double per_entry_variance = 0.0;  // mu_k / rows
};

struct ThresholdParams {
  double missed_prob = 1e-3;           // p_m
  double false_prob = 5e-3;            // p_f
  std::size_t assumed_remaining = 1;   // n_a used for the missed-detection threshold
  bool exact_chi_square = false;       // quantiles from the chi-square law instead of its
                                       // Gaussian approximation (comparison option)
  void validate() const;
};

/// mu_k = (M - cols)(sigma^2 + n_a d / M).
double residual_mean(std::size_t measurements, std::size_t cols_in_ls, std::size_t block_len,
                     std::size_t remaining, double noise_var);

/// sigma_k^2 = (M - cols)^2 / M * (sigma^2 + n_a d / M)^2.
double residual_variance(std::size_t measurements, std::size_t cols_in_ls, std::size_t block_len,
                         std::size_t remaining, double noise_var);

/// Missed-detection threshold; may be negative, callers clamp.
double threshold_missed(std::size_t measurements, std::size_t cols_in_ls, std::size_t block_len,
                        const ThresholdParams& tp, double noise_var);

/// False-detection threshold.
double threshold_false(std::size_t measurements, std::size_t cols_in_ls,
                       const ThresholdParams& tp, double noise_var);

/// min of the two thresholds, clamped below at zero.
double derived_threshold(std::size_t measurements, std::size_t cols_in_ls, std::size_t block_len,
                         const ThresholdParams& tp, double noise_var);

/// Residual-energy moments for the uplink scenario (unit noise variance,
/// per-block energy term snr * d / symbol_time; `detected` is l = |Lambda|).
ResidualStats icbomp_stats(std::size_t antennas, std::size_t symbol_time, std::size_t detected,
                           std::size_t block_len, std::size_t remaining, double snr);

double icbomp_threshold(std::size_t antennas, std::size_t symbol_time, std::size_t detected,
                        std::size_t block_len, const ThresholdParams& tp, double snr);

// -------------------------------------------------------------------------
// Stopping rules

struct DerivedThresholdRule {
  ThresholdParams params;
};
struct RelativeChangeRule {
  double epsilon = 0.25;  // epsilon_1
};
struct ResidualEnergyRule {
  double epsilon;  // epsilon_2
};
struct MaxIterationsRule {
  std::size_t limit;  // K
};

using StoppingRule =
    std::variant<DerivedThresholdRule, RelativeChangeRule, ResidualEnergyRule, MaxIterationsRule>;

enum class RuleTag { derived_threshold, relative_change, residual_energy, max_iterations };

RuleTag rule_tag(const StoppingRule& rule);
const char* rule_tag_name(RuleTag tag);

/// Dimensions and noise scale the derived threshold needs at one iteration.
struct StopContext {
  enum class Scenario { bomp, icbomp } scenario = Scenario::bomp;
  std::size_t rows = 0;         // M, or M_ant * T
  std::size_t cols_in_ls = 0;   // k*d (BOMP) or l*d (ICBOMP)
  std::size_t block_len = 0;    // d
  double noise_var = 1.0;       // sigma^2 (BOMP); 1 for ICBOMP
  double snr = 1.0;             // rho_0 (ICBOMP only)
  std::size_t symbol_time = 0;  // T (ICBOMP only)
};

StopContext bomp_stop_context(std::size_t measurements, std::size_t block_len, double noise_var,
                              std::size_t iteration);
StopContext icbomp_stop_context(std::size_t antennas, std::size_t symbol_time,
                                std::size_t block_len, double snr, std::size_t detected);

struct StopDecision {
  bool stop = false;
  std::optional<double> threshold;  // present iff the rule is energy-based
  RuleTag rule = RuleTag::max_iterations;
  bool zero_norm_flagged = false;   // relative-change rule saw a zero-norm predecessor
};

/// Evaluates one rule after iteration `iteration` completed with residual
/// energy `residual_energy`. Estimates must be aligned on the same index set
/// (zero-padded); the relative-change rule never stops at the first iteration.
StopDecision should_stop(const StoppingRule& rule, std::size_t iteration, double residual_energy,
                         const cvec& previous_estimate, const cvec& current_estimate,
                         const StopContext& ctx);

}  // namespace bsr
