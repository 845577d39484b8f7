#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "numerics.hpp"

namespace bsr {

/// Dimensions and noise level for one block-sparse recovery problem.
struct ModelParams {
  std::size_t block_count = 0;   // N
  std::size_t block_len = 0;     // d
  std::size_t measurements = 0;  // M
  std::size_t sparsity = 0;      // N_a, number of nonzero blocks
  double noise_var = 0.0;        // sigma^2 per complex noise entry
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument naming the violated constraint.
  void validate() const;
};

/// One generated problem: observation = sensing * signal + noise, with the
/// signal nonzero only on `support` (sorted block indices).
struct ProblemInstance {
  ModelParams params;
  ComplexMatrix sensing;              // M x (N*d), entries CN(0, 1/M)
  cvec signal;                        // N*d, nonzero entries CN(0, 1)
  cvec noise;                         // M, CN(0, sigma^2)
  cvec observation;                   // M
  std::vector<std::size_t> support;   // |support| = N_a
};

ProblemInstance generate_instance(const ModelParams& params, Rng& rng);
/// Convenience overload seeding the stream from params.seed.
ProblemInstance generate_instance(const ModelParams& params);

/// The d contiguous columns of block `index` (0-based).
ComplexMatrix block_columns(const ComplexMatrix& b, std::size_t index, std::size_t block_len);

/// Fixture interchange format (binary, little-endian; layout in README).
void save_instance(const ProblemInstance& inst, const std::filesystem::path& path);
ProblemInstance load_instance(const std::filesystem::path& path);

}  // namespace bsr
