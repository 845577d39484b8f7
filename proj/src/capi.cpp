#include "bsr.h"

#include <cstdio>
#include <new>
#include <string>

#include "harness.hpp"

struct bsr_config {
  bsr::ExperimentConfig config;
  std::string last_error;
  std::string scratch;
};

namespace {

bsr_status guarded(bsr_config* cfg, auto&& fn) {
  if (!cfg) return BSR_ERR_CONFIG;
  try {
    fn();
    cfg->last_error.clear();
    return BSR_OK;
  } catch (const bsr::ConfigError& e) {
    cfg->last_error = e.what();
    return BSR_ERR_CONFIG;
  } catch (const std::exception& e) {
    cfg->last_error = e.what();
    return BSR_ERR_RUNTIME;
  } catch (...) {
    cfg->last_error = "unknown error";
    return BSR_ERR_RUNTIME;
  }
}

}  // namespace

extern "C" {

const char* bsr_version(void) { return "1.0.0"; }

bsr_config* bsr_config_new(void) { return new (std::nothrow) bsr_config{}; }

void bsr_config_free(bsr_config* cfg) { delete cfg; }

bsr_status bsr_config_set(bsr_config* cfg, const char* key, const char* value) {
  return guarded(cfg, [&] {
    if (!key || !value) throw bsr::ConfigError("null key or value");
    bsr::apply_key(cfg->config, key, value);
  });
}

bsr_status bsr_config_load_file(bsr_config* cfg, const char* path) {
  return guarded(cfg, [&] {
    if (!path) throw bsr::ConfigError("null path");
    bsr::load_config_file(cfg->config, path);
  });
}

const char* bsr_config_get(bsr_config* cfg, const char* key) {
  if (!cfg || !key) return nullptr;
  const bsr::ExperimentConfig& c = cfg->config;
  const std::string k = key;
  auto render = [&](std::string v) {
    cfg->scratch = std::move(v);
    return cfg->scratch.c_str();
  };
  auto join = [](const auto& items, auto&& fmt) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i) out.push_back(',');
      out += fmt(items[i]);
    }
    return out;
  };
  if (k == "scenario") return render(c.scenario);
  if (k == "n") return render(std::to_string(c.blocks));
  if (k == "d") return render(std::to_string(c.block_len));
  if (k == "m") return render(std::to_string(c.measurements));
  if (k == "na") return render(std::to_string(c.sparsity));
  if (k == "mant") return render(std::to_string(c.antennas));
  if (k == "t") return render(std::to_string(c.symbol_time));
  if (k == "snr-db")
    return render(join(c.snr_db, [](double v) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%g", v);
      return std::string(buf);
    }));
  if (k == "trials") return render(std::to_string(c.trials));
  if (k == "rules") return render(join(c.rules, [](const std::string& s) { return s; }));
  if (k == "pm") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g", c.missed_prob);
    return render(buf);
  }
  if (k == "pf") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g", c.false_prob);
    return render(buf);
  }
  if (k == "na-assumed") return render(std::to_string(c.assumed_remaining));
  if (k == "seed") return render(std::to_string(c.seed));
  if (k == "out") return render(c.out);
  if (k == "guard") return render(std::to_string(c.guard));
  if (k == "threads") return render(std::to_string(c.threads));
  return nullptr;
}

bsr_status bsr_run_sweep(bsr_config* cfg, size_t* rows_out) {
  return guarded(cfg, [&] {
    if (cfg->config.out.empty()) throw bsr::ConfigError("missing required key: out");
    const auto rows = bsr::run_sweep(cfg->config);
    if (rows_out) *rows_out = rows.size();
  });
}

const char* bsr_last_error(const bsr_config* cfg) {
  return cfg ? cfg->last_error.c_str() : "null config";
}

}  // extern "C"
