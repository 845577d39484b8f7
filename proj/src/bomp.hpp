#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "model.hpp"
#include "stopping.hpp"

namespace bsr {

/// Snapshot after one completed iteration.
struct IterationState {
  std::size_t iteration = 0;            // k
  std::vector<std::size_t> detected;    // Lambda_k, in selection order
  cvec residual;                        // r_k
  cvec estimate;                        // coefficients over Lambda_k
  double energy = 0.0;                  // E_k = ||r_k||^2
};

struct RecoveryResult {
  cvec estimate_full;                    // N*d, zeros outside Lambda
  std::vector<std::size_t> detected;     // final Lambda in selection order
  std::size_t iterations = 0;
  std::vector<double> energy_trace;      // E_1, E_2, ...
  std::vector<double> threshold_trace;   // eta_k per iteration (energy-based rules)
  RuleTag stop_reason = RuleTag::max_iterations;
  bool stopped_by_guard = false;         // hard guard fired before the rule
};

/// Index of the non-excluded block maximizing ||B_j^H residual||^2; ties by
/// lowest index. `excluded` is a mask over block indices.
std::size_t select_block(const ComplexMatrix& sensing, const cvec& residual,
                         const std::vector<bool>& excluded, std::size_t block_len);

/// min(30, (M - 1) / d): keeps every least-squares fit overdetermined.
std::size_t default_guard(std::size_t measurements, std::size_t block_len);

/// Called after each completed iteration (diagnostics hook).
using IterationObserver = std::function<void(const IterationState&)>;

RecoveryResult run_bomp(const ProblemInstance& instance, const StoppingRule& rule,
                        std::size_t max_iter_guard, const IterationObserver& observer = {});
RecoveryResult run_bomp(const ProblemInstance& instance, const StoppingRule& rule);

}  // namespace bsr
