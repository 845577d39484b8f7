#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "bomp.hpp"
#include "comms.hpp"

namespace bsr {

/// Invalid configuration (maps to CLI exit code 2).
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// One Monte Carlo sweep: scenario, parameter set, rules to compare, SNR
/// grid, trials per (rule, SNR) cell.
struct ExperimentConfig {
  std::string scenario = "bomp";  // "bomp" | "icbomp"

  // Model dimensions (bomp scenario).
  std::size_t blocks = 128;        // N
  std::size_t block_len = 10;      // d
  std::size_t measurements = 400;  // M
  std::size_t sparsity = 8;        // N_a

  // Uplink dimensions (icbomp scenario; N, d, N_a shared above).
  std::size_t antennas = 4;      // M_ant
  std::size_t symbol_time = 240; // T

  std::vector<double> snr_db;
  std::size_t trials = 100;
  std::vector<std::string> rules{"derived"};
  double missed_prob = 0.001;          // p_m
  double false_prob = 0.005;           // p_f
  std::size_t assumed_remaining = 1;   // n_a for the missed threshold
  std::uint64_t seed = 1;
  std::string out;
  std::size_t guard = 0;   // 0 = min(30, (rows-1)/d)
  unsigned threads = 0;    // 0 = hardware concurrency

  void validate() const;  // throws ConfigError
};

struct MetricsRow {
  std::string scenario;
  std::string rule;
  double snr_db = 0.0;
  double mean_iterations = 0.0;
  double nmse = 0.0;
  double detection_prob = 0.0;
  double ser = 0.0;
  bool has_ser = false;
  std::size_t trials = 0;
  double wall_ms = 0.0;
  double detection_all_prob = 0.0;
};

/// ||truth - estimate||^2 / ||truth||^2.
double nmse(const cvec& truth, const cvec& estimate);

/// |true_support intersect detected| / |true_support|.
double detection_probability(std::span<const std::size_t> true_support,
                             std::span<const std::size_t> detected);

/// Fraction of mismatched symbols.
double symbol_error_rate(const cvec& true_symbols, const cvec& decided_symbols);

/// Parses a rule token: "derived", "relchange[=eps1]", "energy[=eps2]",
/// "maxiter[=K]". A bare "energy" resolves eps2 to the noise energy
/// (M sigma^2, or M_ant*T for the unit-variance uplink).
StoppingRule parse_rule(const std::string& token, const ExperimentConfig& config,
                        double noise_var);

/// Key=value application shared by the CLI, the config file and presets.
void apply_key(ExperimentConfig& config, const std::string& key, const std::string& value);
void apply_preset(ExperimentConfig& config, const std::string& name);
/// Flat "key = value" lines; '#' starts a comment.
void load_config_file(ExperimentConfig& config, const std::filesystem::path& path);

/// Runs every (rule, SNR) cell, writes the CSV atomically to config.out
/// (when set) and returns the rows. Trials run on a worker pool; results do
/// not depend on the thread count.
std::vector<MetricsRow> run_sweep(const ExperimentConfig& config);

std::string csv_header();
std::string to_csv(const std::vector<MetricsRow>& rows);
void write_csv_atomic(const std::filesystem::path& path, const std::string& content);
/// Byte comparison that ignores the wall_ms column.
bool csv_equal_ignoring_walltime(const std::string& a, const std::string& b);

}  // namespace bsr
