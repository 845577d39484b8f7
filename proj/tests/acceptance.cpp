// Acceptance suite: one numbered check per release criterion, each printing a
// single PASS/FAIL line with the measured values. Run with no arguments for
// the full list or with criterion numbers to run a subset.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "harness.hpp"
#include "support/oracles.hpp"
#include "support/pipeline_energy.hpp"

using namespace bsr;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. Threshold arithmetic against the independent long-double oracle.

Outcome criterion1() {
  Rng rng(0xACCE97);
  double worst = 0.0;
  const int tuples = 1000;
  for (int i = 0; i < tuples; ++i) {
    const std::size_t m = 100 + rng.below(3900);
    const std::size_t d = 1 + rng.below(50);
    const std::size_t k = rng.below((m - 1) / d);
    const std::size_t n_a = rng.below(5);
    const double sigma2 = 1e-4 + rng.uniform() * 10.0;
    const double pm = 1e-3 + rng.uniform() * 0.498;
    const double pf = 1e-3 + rng.uniform() * 0.498;
    ThresholdParams tp{pm, pf, std::max<std::size_t>(1, n_a)};

    worst = std::max(worst, test::rel_err(test::oracle_residual_mean(m, k * d, d, n_a, sigma2),
                                          residual_mean(m, k * d, d, n_a, sigma2)));
    worst = std::max(worst,
                     test::rel_err(test::oracle_residual_variance(m, k * d, d, n_a, sigma2),
                                   residual_variance(m, k * d, d, n_a, sigma2)));
    worst = std::max(
        worst, test::rel_err(
                   test::oracle_threshold_missed(m, k * d, d, tp.assumed_remaining, sigma2, pm),
                   threshold_missed(m, k * d, d, tp, sigma2)));
    worst = std::max(worst, test::rel_err(test::oracle_threshold_false(m, k * d, sigma2, pf),
                                          threshold_false(m, k * d, tp, sigma2)));
    worst = std::max(
        worst,
        test::rel_err(
            test::oracle_derived_threshold(m, k * d, d, tp.assumed_remaining, sigma2, pm, pf),
            derived_threshold(m, k * d, d, tp, sigma2)));

    // Uplink forms (Eq. 11 and the unnumbered threshold pair).
    const std::size_t mant = 1 + rng.below(16);
    const std::size_t t = 100 + rng.below(1900);
    const std::size_t du = 10 + rng.below(90);
    const std::size_t l = rng.below(std::max<std::size_t>(1, (mant * t - 1) / du));
    const double rho0 = 0.05 + rng.uniform() * 10.0;
    const ResidualStats st = icbomp_stats(mant, t, l, du, n_a, rho0);
    worst = std::max(worst, test::rel_err(test::oracle_icbomp_mean(mant, t, l, du, n_a, rho0),
                                          st.mean));
    worst = std::max(worst, test::rel_err(
                                test::oracle_icbomp_variance(mant, t, l, du, n_a, rho0),
                                st.variance));
    worst = std::max(
        worst, test::rel_err(test::oracle_icbomp_threshold(mant, t, l, du, tp.assumed_remaining,
                                                           rho0, pm, pf),
                             icbomp_threshold(mant, t, l, du, tp, rho0)));
  }
  return {worst <= 1e-12,
          "worst relative error " + fmt(worst) + " over " + std::to_string(tuples) +
              " tuples (limit 1e-12)"};
}

// ---------------------------------------------------------------------------
// 2/3. Calibration of the derived thresholds as frequencies, with the
// residual energy drawn from the model law the thresholds are built on
// (E_k normal with the Eq. 3/4 moments).

Outcome calibration(bool missed_side) {
  const std::size_t m = 400, d = 10, k = 3;
  const double sigma2 = 0.05;
  const double p = 0.01;
  const std::size_t trials = 20000;
  ThresholdParams tp{p, p, 1};

  const std::size_t n_a = missed_side ? 1 : 0;
  const double mu = residual_mean(m, k * d, d, n_a, sigma2);
  const double sd = std::sqrt(residual_variance(m, k * d, d, n_a, sigma2));
  const double eta = missed_side ? threshold_missed(m, k * d, d, tp, sigma2)
                                 : threshold_false(m, k * d, tp, sigma2);

  Rng rng(missed_side ? 0xC2ull : 0xC3ull);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < trials; ++i) {
    const double energy = mu + sd * rng.gaussian();
    const bool hit = missed_side ? energy <= eta : energy >= eta;
    hits += hit ? 1 : 0;
  }
  const double freq = static_cast<double>(hits) / static_cast<double>(trials);
  const double half = 2.5758293035 * std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
  const bool pass = freq >= p - half && freq <= p + half;
  return {pass, "frequency " + fmt(freq) + " vs 99% CI [" + fmt(p - half) + ", " +
                    fmt(p + half) + "] around p = " + fmt(p)};
}

// ---------------------------------------------------------------------------
// 4/5. Desk-scale recovery sweep shared by the two figure-trend criteria.

const std::vector<MetricsRow>& desk_bomp_rows() {
  static const std::vector<MetricsRow> rows = [] {
    ExperimentConfig cfg;
    apply_preset(cfg, "desk-bomp");
    cfg.rules = {"derived", "energy"};
    cfg.seed = 20250809;
    cfg.out.clear();
    return run_sweep(cfg);
  }();
  return rows;
}

const MetricsRow& find_row(const std::vector<MetricsRow>& rows, const std::string& rule,
                           double snr) {
  for (const MetricsRow& r : rows)
    if (r.rule == rule && r.snr_db == snr) return r;
  throw std::runtime_error("missing row " + rule + "@" + fmt(snr));
}

Outcome criterion4() {
  const auto& rows = desk_bomp_rows();
  std::string detail;
  bool pass = true;
  for (double snr : {20.0, 25.0}) {
    const MetricsRow& r = find_row(rows, "derived", snr);
    pass = pass && std::abs(r.mean_iterations - 8.0) <= 0.5;
    detail += "mean_iter(derived@" + fmt(snr) + "dB) = " + fmt(r.mean_iterations) + "; ";
  }
  return {pass, detail + "target 8 +- 0.5 over 200 trials"};
}

Outcome criterion5() {
  const auto& rows = desk_bomp_rows();
  bool pass = true;
  std::string detail;
  for (double snr : {20.0, 25.0}) {
    const MetricsRow& r = find_row(rows, "derived", snr);
    pass = pass && r.detection_prob >= 0.99;
    detail += "det(derived@" + fmt(snr) + ") = " + fmt(r.detection_prob) + "; ";
  }
  for (double snr : {0.0, 5.0}) {
    const double derived = find_row(rows, "derived", snr).detection_prob;
    const double energy = find_row(rows, "energy", snr).detection_prob;
    pass = pass && derived >= energy + 0.02;
    detail += "det gap@" + fmt(snr) + "dB = " + fmt(derived - energy) + "; ";
  }
  return {pass, detail + "need >= 0.99 high-snr and gap >= 0.02 low-snr"};
}

// ---------------------------------------------------------------------------
// 6/7. Desk-scale uplink sweep shared by the two ICBOMP criteria.

const std::vector<MetricsRow>& desk_icbomp_rows() {
  static const std::vector<MetricsRow> rows = [] {
    ExperimentConfig cfg;
    apply_preset(cfg, "desk-icbomp");
    cfg.seed = 20250810;
    cfg.out.clear();
    return run_sweep(cfg);
  }();
  return rows;
}

Outcome criterion6() {
  const auto& rows = desk_icbomp_rows();
  const std::size_t guard = std::min<std::size_t>(30, (4 * 240 - 1) / 48);
  bool pass = true;
  std::string detail;
  for (double snr : {-2.0, 0.0, 2.0}) {
    const MetricsRow& d = find_row(rows, "derived", snr);
    pass = pass && std::abs(d.mean_iterations - 4.0) <= 1.0;
    detail += "derived@" + fmt(snr) + " = " + fmt(d.mean_iterations) + "; ";
  }
  for (double snr : {-2.0, 0.0, 2.0}) {
    const MetricsRow& m = find_row(rows, "maxiter=30", snr);
    pass = pass && m.mean_iterations == static_cast<double>(std::min<std::size_t>(guard, 30));
    detail += "maxiter@" + fmt(snr) + " = " + fmt(m.mean_iterations) + "; ";
  }
  return {pass, detail + "targets: 4 +- 1 and exactly " +
                    std::to_string(std::min<std::size_t>(guard, 30))};
}

Outcome criterion7() {
  const auto& rows = desk_icbomp_rows();
  bool pass = true;
  std::string detail;
  for (double snr : {-2.0, 0.0, 2.0}) {
    const double ser_d = find_row(rows, "derived", snr).ser;
    const double ser_m = find_row(rows, "maxiter=30", snr).ser;
    pass = pass && ser_d <= 3.0 * ser_m;
    detail += "ser@" + fmt(snr) + " derived/maxiter = " + fmt(ser_d) + "/" + fmt(ser_m) + "; ";
  }
  return {pass, detail + "need derived <= 3x maxiter"};
}

// ---------------------------------------------------------------------------
// 8. Coding chain.

Outcome criterion8() {
  Rng rng(0xC0DE);
  // Round-trip identity on 10^4 random messages.
  for (int i = 0; i < 10000; ++i) {
    const std::size_t n = 8 + rng.below(505);
    BitVec msg(n);
    for (auto& b : msg) b = static_cast<std::uint8_t>(rng.next_u64() & 1u);
    SoftWord soft;
    const BitVec coded = conv_encode(msg);
    soft.resize(coded.size());
    for (std::size_t j = 0; j < coded.size(); ++j) soft[j].level = coded[j] ? 15 : 0;
    if (viterbi_decode(soft) != msg)
      return {false, "round-trip failed at message " + std::to_string(i)};
  }
  // Exhaustive single-coded-bit-flip correction on a 64-bit message.
  BitVec msg(64);
  for (auto& b : msg) b = static_cast<std::uint8_t>(rng.next_u64() & 1u);
  const BitVec coded = conv_encode(msg);
  for (std::size_t i = 0; i < coded.size(); ++i) {
    BitVec bad = coded;
    bad[i] ^= 1;
    SoftWord soft(bad.size());
    for (std::size_t j = 0; j < bad.size(); ++j) soft[j].level = bad[j] ? 15 : 0;
    if (viterbi_decode(soft) != msg)
      return {false, "single-flip correction failed at coded bit " + std::to_string(i)};
  }
  // CRC detects every 1- and 2-bit error pattern across a 64-bit window.
  BitVec window(64);
  for (auto& b : window) b = static_cast<std::uint8_t>(rng.next_u64() & 1u);
  const BitVec word = crc_append(window);
  for (std::size_t i = 0; i < word.size(); ++i) {
    BitVec bad = word;
    bad[i] ^= 1;
    if (crc_check(bad)) return {false, "missed 1-bit error at " + std::to_string(i)};
    for (std::size_t j = i + 1; j < word.size(); ++j) {
      bad[j] ^= 1;
      if (crc_check(bad))
        return {false,
                "missed 2-bit error at " + std::to_string(i) + "," + std::to_string(j)};
      bad[j] ^= 1;
    }
  }
  return {true, "10^4 round trips, 140 single flips corrected, all 1/2-bit errors detected"};
}

// ---------------------------------------------------------------------------
// 9. Moment match of the residual energy on the measurement pipeline.

Outcome criterion9() {
  const std::size_t m = 400, d = 5, k = 2;
  const double sigma2 = 2.0;
  const std::size_t trials = 10000;
  bool pass = true;
  std::string detail;
  for (std::size_t n_a : {0u, 1u, 2u}) {
    test::FixedLambdaSetup setup;
    setup.measurements = m;
    setup.block_len = d;
    setup.lambda_blocks = k;
    setup.support_blocks = 2;
    setup.remaining = n_a;
    setup.noise_var = sigma2;
    setup.signal = test::SignalKind::gaussian;
    Rng rng = Rng::derive(0xAC9, {n_a});
    double sum = 0.0, sumsq = 0.0;
    for (std::size_t i = 0; i < trials; ++i) {
      const double e = test::sample_residual_energy(setup, rng);
      sum += e;
      sumsq += e * e;
    }
    const double mean = sum / static_cast<double>(trials);
    const double var = sumsq / static_cast<double>(trials) - mean * mean;
    const double want_mean = residual_mean(m, k * d, d, n_a, sigma2);
    const double want_var = residual_variance(m, k * d, d, n_a, sigma2);
    const double mean_err = std::abs(mean - want_mean) / want_mean;
    const double var_err = std::abs(var - want_var) / want_var;
    pass = pass && mean_err <= 0.03 && var_err <= 0.10;
    detail += "n_a=" + std::to_string(n_a) + ": mean err " + fmt(mean_err) + ", var err " +
              fmt(var_err) + "; ";
  }
  return {pass, detail + "limits 3% / 10%"};
}

// ---------------------------------------------------------------------------
// 10. Byte-identical reproducibility modulo wall time.

Outcome criterion10() {
  const auto dir = std::filesystem::temp_directory_path();
  const auto out1 = dir / "bsr_accept_rep1.csv";
  const auto out2 = dir / "bsr_accept_rep2.csv";
  auto make = [&](const std::filesystem::path& out, unsigned threads) {
    ExperimentConfig cfg;
    cfg.scenario = "bomp";
    cfg.blocks = 32;
    cfg.block_len = 5;
    cfg.measurements = 100;
    cfg.sparsity = 4;
    cfg.snr_db = {5.0, 15.0};
    cfg.trials = 10;
    cfg.rules = {"derived", "energy", "relchange"};
    cfg.seed = 777;
    cfg.threads = threads;
    cfg.out = out.string();
    run_sweep(cfg);
  };
  make(out1, 1);
  make(out2, 2);
  std::ifstream f1(out1), f2(out2);
  const std::string a((std::istreambuf_iterator<char>(f1)), {});
  const std::string b((std::istreambuf_iterator<char>(f2)), {});
  std::filesystem::remove(out1);
  std::filesystem::remove(out2);
  const bool pass = csv_equal_ignoring_walltime(a, b) && !a.empty();
  return {pass, pass ? "two runs byte-identical outside the wall_ms column"
                     : "runs differ beyond wall_ms"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, std::pair<const char*, std::function<Outcome()>>> criteria = {
      {1, {"threshold arithmetic vs independent oracle (rel 1e-12)", criterion1}},
      {2, {"missed-detection calibration at p_m = 0.01", [] { return calibration(true); }}},
      {3, {"false-detection calibration at p_f = 0.01", [] { return calibration(false); }}},
      {4, {"desk-scale iteration count trend (derived, high snr)", criterion4}},
      {5, {"desk-scale detection probability trend", criterion5}},
      {6, {"desk-scale uplink iteration trend", criterion6}},
      {7, {"desk-scale uplink ser ratio", criterion7}},
      {8, {"coding chain: round trip, flips, crc windows", criterion8}},
      {9, {"residual-energy moment match on the pipeline", criterion9}},
      {10, {"byte-identical reproducibility", criterion10}},
  };

  std::vector<int> which;
  for (int i = 1; i < argc; ++i) which.push_back(std::atoi(argv[i]));
  if (which.empty())
    for (const auto& [num, entry] : criteria) which.push_back(num);

  bool all_pass = true;
  for (int num : which) {
    const auto it = criteria.find(num);
    if (it == criteria.end()) {
      std::fprintf(stderr, "unknown criterion %d\n", num);
      return 2;
    }
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = it->second.second();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("C%-2d %s: %s [%s] (%.1fs)\n", num, outcome.pass ? "PASS" : "FAIL",
                it->second.first, outcome.detail.c_str(), secs);
    std::fflush(stdout);
    all_pass = all_pass && outcome.pass;
  }
  return all_pass ? 0 : 1;
}
