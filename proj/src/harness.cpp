#include "harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace bsr {

void ExperimentConfig::validate() const {
  if (scenario != "bomp" && scenario != "icbomp")
    throw ConfigError("scenario must be 'bomp' or 'icbomp'");
  if (snr_db.empty()) throw ConfigError("snr-db grid must be nonempty");
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (rules.empty()) throw ConfigError("rules list must be nonempty");
  try {
    ThresholdParams tp{missed_prob, false_prob, assumed_remaining};
    tp.validate();
    if (scenario == "bomp") {
      ModelParams mp{blocks, block_len, measurements, sparsity, 1.0, 0};
      mp.validate();
    } else {
      CommsParams cp{blocks, sparsity, block_len, antennas, symbol_time, 1.0, 0};
      cp.validate();
    }
    for (const std::string& r : rules) parse_rule(r, *this, 1.0);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

double nmse(const cvec& truth, const cvec& estimate) {
  if (truth.size() != estimate.size()) throw std::invalid_argument("nmse: length mismatch");
  const double denom = norm_sq(truth);
  if (denom == 0.0) throw std::invalid_argument("nmse: zero-energy truth");
  double acc = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) acc += std::norm(truth[i] - estimate[i]);
  return acc / denom;
}

double detection_probability(std::span<const std::size_t> true_support,
                             std::span<const std::size_t> detected) {
  if (true_support.empty()) throw std::invalid_argument("detection_probability: empty support");
  const std::set<std::size_t> det(detected.begin(), detected.end());
  std::size_t hit = 0;
  for (std::size_t s : true_support) hit += det.count(s);
  return static_cast<double>(hit) / static_cast<double>(true_support.size());
}

double symbol_error_rate(const cvec& true_symbols, const cvec& decided_symbols) {
  if (true_symbols.size() != decided_symbols.size())
    throw std::invalid_argument("symbol_error_rate: length mismatch");
  std::size_t errors = 0;
  for (std::size_t i = 0; i < true_symbols.size(); ++i)
    if (std::abs(true_symbols[i] - decided_symbols[i]) > 1e-9) ++errors;
  return static_cast<double>(errors) / static_cast<double>(true_symbols.size());
}

namespace {

double parse_double(const std::string& s, const char* what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(std::string("invalid number for ") + what + ": '" + s + "'");
  }
}

std::uint64_t parse_u64(const std::string& s, const char* what) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(std::string("invalid integer for ") + what + ": '" + s + "'");
  }
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  parts.push_back(cur);
  return parts;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

StoppingRule parse_rule(const std::string& token, const ExperimentConfig& config,
                        double noise_var) {
  std::string name = token;
  std::string arg;
  if (const auto eq = token.find('='); eq != std::string::npos) {
    name = token.substr(0, eq);
    arg = token.substr(eq + 1);
  }
  if (name == "derived") {
    if (!arg.empty()) throw ConfigError("rule 'derived' takes no parameter");
    ThresholdParams tp{config.missed_prob, config.false_prob, config.assumed_remaining};
    return DerivedThresholdRule{tp};
  }
  if (name == "relchange") {
    const double eps = arg.empty() ? 0.25 : parse_double(arg, "relchange");
    if (!(eps > 0.0)) throw ConfigError("relchange epsilon must be positive");
    return RelativeChangeRule{eps};
  }
  if (name == "energy") {
    double eps;
    if (arg.empty()) {
      // Noise energy: M sigma^2, or M_ant*T for the unit-variance uplink.
      const double rows = config.scenario == "bomp"
                              ? static_cast<double>(config.measurements)
                              : static_cast<double>(config.antennas * config.symbol_time);
      eps = rows * noise_var;
    } else {
      eps = parse_double(arg, "energy");
    }
    if (!(eps > 0.0)) throw ConfigError("energy epsilon must be positive");
    return ResidualEnergyRule{eps};
  }
  if (name == "maxiter") {
    const std::uint64_t k = arg.empty() ? 30 : parse_u64(arg, "maxiter");
    if (k < 1) throw ConfigError("maxiter limit must be >= 1");
    return MaxIterationsRule{static_cast<std::size_t>(k)};
  }
  throw ConfigError("unknown rule '" + token + "'");
}

void apply_key(ExperimentConfig& config, const std::string& key, const std::string& value) {
  if (key == "scenario") {
    config.scenario = value;
  } else if (key == "preset") {
    apply_preset(config, value);
  } else if (key == "n") {
    config.blocks = parse_u64(value, "n");
  } else if (key == "d") {
    config.block_len = parse_u64(value, "d");
  } else if (key == "m") {
    config.measurements = parse_u64(value, "m");
  } else if (key == "na") {
    config.sparsity = parse_u64(value, "na");
  } else if (key == "mant") {
    config.antennas = parse_u64(value, "mant");
  } else if (key == "t") {
    config.symbol_time = parse_u64(value, "t");
  } else if (key == "snr-db") {
    config.snr_db.clear();
    for (const std::string& part : split(value, ','))
      config.snr_db.push_back(parse_double(trim(part), "snr-db"));
  } else if (key == "trials") {
    config.trials = parse_u64(value, "trials");
  } else if (key == "rules") {
    config.rules.clear();
    for (const std::string& part : split(value, ',')) {
      const std::string r = trim(part);
      if (!r.empty()) config.rules.push_back(r);
    }
  } else if (key == "pm") {
    config.missed_prob = parse_double(value, "pm");
  } else if (key == "pf") {
    config.false_prob = parse_double(value, "pf");
  } else if (key == "na-assumed") {
    config.assumed_remaining = parse_u64(value, "na-assumed");
  } else if (key == "seed") {
    config.seed = parse_u64(value, "seed");
  } else if (key == "out") {
    config.out = value;
  } else if (key == "guard") {
    config.guard = parse_u64(value, "guard");
  } else if (key == "threads") {
    config.threads = static_cast<unsigned>(parse_u64(value, "threads"));
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

void apply_preset(ExperimentConfig& config, const std::string& name) {
  auto set = [&](std::initializer_list<std::pair<const char*, const char*>> kvs) {
    for (const auto& [k, v] : kvs) apply_key(config, k, v);
  };
  if (name == "desk-bomp") {
    set({{"scenario", "bomp"},
         {"n", "128"},
         {"d", "10"},
         {"m", "400"},
         {"na", "8"},
         {"snr-db", "0,5,20,25"},
         {"trials", "200"},
         {"rules", "derived,energy,relchange"}});
  } else if (name == "desk-icbomp") {
    set({{"scenario", "icbomp"},
         {"n", "64"},
         {"d", "48"},
         {"na", "4"},
         {"mant", "4"},
         {"t", "240"},
         {"snr-db", "-2,0,2"},
         {"trials", "100"},
         {"rules", "derived,maxiter=30"}});
  } else if (name == "paper-bomp") {
    set({{"scenario", "bomp"},
         {"n", "640"},
         {"d", "50"},
         {"m", "2000"},
         {"na", "8"},
         {"snr-db", "0,5,10,15,20,25,30"},
         {"trials", "100"},
         {"rules", "derived,relchange,energy"}});
  } else if (name == "paper-icbomp") {
    set({{"scenario", "icbomp"},
         {"n", "640"},
         {"d", "200"},
         {"na", "16"},
         {"mant", "8"},
         {"t", "1000"},
         {"snr-db", "-6,-4,-2,0,2"},
         {"trials", "50"},
         {"rules", "derived,maxiter=30"}});
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
}

void load_config_file(ExperimentConfig& config, const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string stripped = trim(line.substr(0, line.find('#')));
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    apply_key(config, trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
  }
}

namespace {

struct TrialMetrics {
  double iterations = 0.0;
  double nmse_value = 0.0;
  double detection = 0.0;
  double detection_all = 0.0;
  double symbol_errors = 0.0;
  double symbol_total = 0.0;
};

struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double v) {
    const double y = v - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

TrialMetrics run_bomp_trial(const ExperimentConfig& config, const StoppingRule& rule,
                            double noise_var, std::size_t guard, Rng rng) {
  ModelParams mp{config.blocks, config.block_len, config.measurements, config.sparsity,
                 noise_var, 0};
  const ProblemInstance inst = generate_instance(mp, rng);
  const RecoveryResult res = run_bomp(inst, rule, guard);

  TrialMetrics tm;
  tm.iterations = static_cast<double>(res.iterations);
  tm.nmse_value = nmse(inst.signal, res.estimate_full);
  tm.detection = detection_probability(inst.support, res.detected);
  tm.detection_all = tm.detection == 1.0 ? 1.0 : 0.0;
  return tm;
}

TrialMetrics run_icbomp_trial(const ExperimentConfig& config, const StoppingRule& rule,
                              double snr, std::size_t guard, Rng rng) {
  CommsParams cp{config.blocks,  config.sparsity,    config.block_len,
                 config.antennas, config.symbol_time, snr,
                 0};
  const CommsInstance inst = generate_comms_instance(cp, rng);
  const IcbompResult res = run_icbomp(inst, rule, guard);

  TrialMetrics tm;
  tm.iterations = static_cast<double>(res.iterations);
  tm.nmse_value = nmse(inst.full_signal(), res.estimate_full);

  std::vector<std::size_t> found = res.decoded_users;
  found.insert(found.end(), res.detected_not_decoded.begin(), res.detected_not_decoded.end());
  tm.detection = detection_probability(inst.active, found);
  tm.detection_all = tm.detection == 1.0 ? 1.0 : 0.0;

  const std::size_t d = cp.block_len;
  tm.symbol_total = static_cast<double>(inst.active.size() * d);
  double errors = 0.0;
  for (std::size_t i = 0; i < inst.active.size(); ++i) {
    const std::size_t user = inst.active[i];
    const auto it = std::find_if(res.symbol_decisions.begin(), res.symbol_decisions.end(),
                                 [&](const auto& pr) { return pr.first == user; });
    if (it == res.symbol_decisions.end()) {
      errors += static_cast<double>(d);  // undetected: every symbol counts as an error
    } else {
      errors += symbol_error_rate(inst.symbols[i], it->second) * static_cast<double>(d);
    }
  }
  tm.symbol_errors = errors;
  return tm;
}

}  // namespace

std::vector<MetricsRow> run_sweep(const ExperimentConfig& config) {
  config.validate();
  const bool is_bomp = config.scenario == "bomp";
  const std::size_t rows_dim =
      is_bomp ? config.measurements : config.antennas * config.symbol_time;
  const std::size_t guard = config.guard != 0
                                ? config.guard
                                : std::min<std::size_t>(30, (rows_dim - 1) / config.block_len);
  if (guard * config.block_len >= rows_dim)
    throw ConfigError("guard * d must stay below the measurement dimension");

  unsigned workers = config.threads != 0 ? config.threads : std::thread::hardware_concurrency();
  workers = std::clamp(workers, 1u, 16u);

  std::vector<MetricsRow> rows;
  for (std::size_t ri = 0; ri < config.rules.size(); ++ri) {
    for (std::size_t si = 0; si < config.snr_db.size(); ++si) {
      const double snr_db = config.snr_db[si];
      // SNR is 1/sigma^2 for the recovery model and rho_0 for the uplink.
      const double noise_var = is_bomp ? std::pow(10.0, -snr_db / 10.0) : 1.0;
      const double snr_linear = std::pow(10.0, snr_db / 10.0);
      const StoppingRule rule = parse_rule(config.rules[ri], config, noise_var);

      const auto start = std::chrono::steady_clock::now();
      std::vector<TrialMetrics> trial_results(config.trials);
      std::atomic<std::size_t> next_trial{0};
      std::atomic<bool> failed{false};
      std::exception_ptr error;
      std::mutex error_mutex;

      auto worker = [&]() {
        while (!failed.load(std::memory_order_relaxed)) {
          const std::size_t t = next_trial.fetch_add(1);
          if (t >= config.trials) break;
          try {
            // Trial streams are keyed by (scenario, snr point, trial) so
            // every rule faces the same instances.
            Rng rng = Rng::derive(config.seed, {is_bomp ? 0ull : 1ull, si, t});
            trial_results[t] = is_bomp
                                   ? run_bomp_trial(config, rule, noise_var, guard, std::move(rng))
                                   : run_icbomp_trial(config, rule, snr_linear, guard,
                                                      std::move(rng));
          } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) error = std::current_exception();
            failed.store(true, std::memory_order_relaxed);
          }
        }
      };
      std::vector<std::thread> pool;
      for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
      worker();
      for (std::thread& th : pool) th.join();
      if (error) {
        try {
          std::rethrow_exception(error);
        } catch (const std::exception& e) {
          throw std::runtime_error("cell rule=" + config.rules[ri] + " snr_db=" +
                                   format_double(snr_db) + ": " + e.what());
        }
      }

      KahanSum iters, nm, det, det_all, errs, total;
      for (const TrialMetrics& tm : trial_results) {
        iters.add(tm.iterations);
        nm.add(tm.nmse_value);
        det.add(tm.detection);
        det_all.add(tm.detection_all);
        errs.add(tm.symbol_errors);
        total.add(tm.symbol_total);
      }
      const double n = static_cast<double>(config.trials);
      MetricsRow row;
      row.scenario = config.scenario;
      row.rule = config.rules[ri];
      row.snr_db = snr_db;
      row.mean_iterations = iters.sum / n;
      row.nmse = nm.sum / n;
      row.detection_prob = det.sum / n;
      row.detection_all_prob = det_all.sum / n;
      row.has_ser = !is_bomp;
      row.ser = total.sum > 0.0 ? errs.sum / total.sum : 0.0;
      row.trials = config.trials;
      row.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - start)
                        .count();
      rows.push_back(std::move(row));
    }
  }

  if (!config.out.empty()) write_csv_atomic(config.out, to_csv(rows));
  return rows;
}

std::string csv_header() {
  return "scenario,rule,snr_db,mean_iterations,nmse,detection_prob,ser,trials,wall_ms,"
         "detection_all_prob";
}

std::string to_csv(const std::vector<MetricsRow>& rows) {
  std::string out = csv_header();
  out.push_back('\n');
  for (const MetricsRow& r : rows) {
    out += r.scenario;
    out.push_back(',');
    out += r.rule;
    out.push_back(',');
    out += format_double(r.snr_db);
    out.push_back(',');
    out += format_double(r.mean_iterations);
    out.push_back(',');
    out += format_double(r.nmse);
    out.push_back(',');
    out += format_double(r.detection_prob);
    out.push_back(',');
    if (r.has_ser) out += format_double(r.ser);
    out.push_back(',');
    out += std::to_string(r.trials);
    out.push_back(',');
    out += format_double(r.wall_ms);
    out.push_back(',');
    out += format_double(r.detection_all_prob);
    out.push_back('\n');
  }
  return out;
}

void write_csv_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    os << content;
    if (!os) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

bool csv_equal_ignoring_walltime(const std::string& a, const std::string& b) {
  auto normalize = [](const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
      auto fields = split(line, ',');
      if (fields.size() >= 9) fields[8] = "-";  // wall_ms column
      std::string joined;
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) joined.push_back(',');
        joined += fields[i];
      }
      lines.push_back(joined);
    }
    return lines;
  };
  return normalize(a) == normalize(b);
}

}  // namespace bsr
