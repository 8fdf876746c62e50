// Command-line front end for the asyncmde shared library. Talks to the
// library exclusively through the C API in asyncmde.h.
//
// Exit codes: 0 success, 1 config error, 2 invariant violation, 3 I/O error.

#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "asyncmde.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitInvariant = 2;
constexpr int kExitIo = 3;

int exit_code_for(amde_status st) {
  switch (st) {
    case AMDE_OK:
      return kExitOk;
    case AMDE_ERR_INVALID_ARGUMENT:
    case AMDE_ERR_CONFIG:
      return kExitConfig;
    case AMDE_ERR_STATE:
    case AMDE_ERR_DEGENERATE:
    case AMDE_ERR_INVARIANT:
      return kExitInvariant;
    case AMDE_ERR_FORMAT:
    case AMDE_ERR_TRUNCATED:
    case AMDE_ERR_IO:
      return kExitIo;
    default:
      return kExitConfig;
  }
}

int report_failure(const char* what, amde_status st) {
  std::fprintf(stderr, "asyncmde: %s failed: %s\n", what, amde_last_error());
  return exit_code_for(st);
}

struct ConfigHandle {
  amde_config* ptr = amde_config_create();
  ~ConfigHandle() { amde_config_destroy(ptr); }
};

struct SequenceHandle {
  amde_sequence* ptr = nullptr;
  ~SequenceHandle() { amde_sequence_destroy(ptr); }
};

struct RunHandle {
  amde_run* ptr = nullptr;
  ~RunHandle() { amde_run_destroy(ptr); }
};

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value
  std::string out_dir;
  std::string seed;
  std::string mode;
  std::string n;
  std::string frames;
  bool virtual_clock = false;
};

void add_common_options(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "configuration file (key = value)");
  cmd->add_option("--set", opts.overrides,
                  "override a config key, e.g. --set scene.seed=7 (repeatable)");
  cmd->add_option("--out", opts.out_dir, "output directory");
  cmd->add_option("--seed", opts.seed, "shorthand for --set scene.seed=...");
  cmd->add_option("--mode", opts.mode, "shorthand for --set run.mode=...");
  cmd->add_option("--n", opts.n, "shorthand for --set run.refresh_interval=...");
  cmd->add_option("--frames", opts.frames, "shorthand for --set run.frames=...");
  cmd->add_flag("--virtual-clock", opts.virtual_clock,
                "shorthand for --set run.virtual_clock=true");
}

// Builds the config from file + overrides; every key is validated before
// any subcommand does work. Returns AMDE_OK or the first failure.
amde_status apply_options(const ConfigHandle& cfg, const CommonOptions& opts) {
  if (!opts.config_path.empty()) {
    const amde_status st = amde_config_load_file(cfg.ptr, opts.config_path.c_str());
    if (st != AMDE_OK) return st;
  }
  for (const std::string& kv : opts.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "asyncmde: --set expects key=value, got '%s'\n", kv.c_str());
      return AMDE_ERR_CONFIG;
    }
    const std::string key = kv.substr(0, eq);
    const std::string value = kv.substr(eq + 1);
    const amde_status st = amde_config_set(cfg.ptr, key.c_str(), value.c_str());
    if (st != AMDE_OK) return st;
  }
  if (!opts.seed.empty()) {
    const amde_status st = amde_config_set(cfg.ptr, "scene.seed", opts.seed.c_str());
    if (st != AMDE_OK) return st;
  }
  if (!opts.mode.empty()) {
    const amde_status st = amde_config_set(cfg.ptr, "run.mode", opts.mode.c_str());
    if (st != AMDE_OK) return st;
  }
  if (!opts.n.empty()) {
    const amde_status st = amde_config_set(cfg.ptr, "run.refresh_interval", opts.n.c_str());
    if (st != AMDE_OK) return st;
  }
  if (!opts.frames.empty()) {
    const amde_status st = amde_config_set(cfg.ptr, "run.frames", opts.frames.c_str());
    if (st != AMDE_OK) return st;
  }
  if (opts.virtual_clock) {
    const amde_status st = amde_config_set(cfg.ptr, "run.virtual_clock", "true");
    if (st != AMDE_OK) return st;
  }
  return AMDE_OK;
}

amde_status obtain_sequence(const ConfigHandle& cfg, SequenceHandle& seq) {
  char dir[1024] = {0};
  const amde_status st = amde_config_get(cfg.ptr, "run.sequence_dir", dir, sizeof(dir));
  if (st != AMDE_OK) return st;
  if (dir[0] != '\0') return amde_sequence_load(dir, &seq.ptr);
  return amde_sequence_generate(cfg.ptr, &seq.ptr);
}

int run_command(const CommonOptions& opts, bool async) {
  ConfigHandle cfg;
  amde_status st = apply_options(cfg, opts);
  if (st != AMDE_OK) return report_failure("configuration", st);

  SequenceHandle seq;
  st = obtain_sequence(cfg, seq);
  if (st != AMDE_OK) return report_failure("sequence", st);

  RunHandle run;
  st = async ? amde_run_async(cfg.ptr, seq.ptr, &run.ptr)
             : amde_run_sync(cfg.ptr, seq.ptr, &run.ptr);
  if (st != AMDE_OK) return report_failure(async ? "run-async" : "run-sync", st);

  if (!opts.out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(opts.out_dir, ec);
    if (ec) {
      std::fprintf(stderr, "asyncmde: cannot create %s: %s\n", opts.out_dir.c_str(),
                   ec.message().c_str());
      return kExitIo;
    }
    const std::string log_path = opts.out_dir + "/run_log.txt";
    const std::string csv_path = opts.out_dir + "/lag.csv";
    int64_t max_lag = 0;
    for (int64_t i = 0; i < amde_run_frame_count(run.ptr); ++i) {
      amde_frame_info info;
      if (amde_run_frame(run.ptr, i, &info) == AMDE_OK && info.lag > max_lag) {
        max_lag = info.lag;
      }
    }
    st = amde_run_write_log(run.ptr, log_path.c_str());
    if (st != AMDE_OK) return report_failure("run log", st);
    st = amde_run_write_lag_csv(run.ptr, static_cast<int>(max_lag) + 1,
                                csv_path.c_str());
    if (st != AMDE_OK) return report_failure("lag csv", st);
    std::printf("wrote %s and %s\n", log_path.c_str(), csv_path.c_str());
  }

  amde_cycle_stats stats;
  if (amde_run_cycle_stats(run.ptr, &stats) == AMDE_OK) {
    std::printf("frames=%lld cycle absrel=%.6g rmse=%.6g delta1=%.6g mean_t=%.6g "
                "fastpath=%.6g\n",
                static_cast<long long>(stats.frames), stats.absrel, stats.rmse,
                stats.delta1, stats.mean_trust, stats.fastpath_pct);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"asyncmde: dual-rate amortized depth perception benchmark"};
  app.require_subcommand(1);
  app.footer(std::string("Configuration keys:\n") + amde_config_describe_keys());

  CommonOptions gen_opts, sync_opts, async_opts, sweep_opts, bench_opts;

  CLI::App* gen = app.add_subcommand("generate", "generate a sequence and export it");
  add_common_options(gen, gen_opts);

  CLI::App* rsync = app.add_subcommand("run-sync", "deterministic synchronous replay");
  add_common_options(rsync, sync_opts);

  CLI::App* rasync = app.add_subcommand("run-async", "dual-rate asynchronous run");
  add_common_options(rasync, async_opts);

  CLI::App* sweep = app.add_subcommand("sweep-lag", "multi-seed degradation sweep");
  add_common_options(sweep, sweep_opts);

  CLI::App* bench = app.add_subcommand("bench-cache", "feature cache stress benchmark");
  add_common_options(bench, bench_opts);

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) {
    ConfigHandle cfg;
    amde_status st = apply_options(cfg, gen_opts);
    if (st != AMDE_OK) return report_failure("configuration", st);
    if (gen_opts.out_dir.empty()) {
      std::fprintf(stderr, "asyncmde: generate requires --out\n");
      return kExitConfig;
    }
    st = amde_generate(cfg.ptr, gen_opts.out_dir.c_str());
    if (st != AMDE_OK) return report_failure("generate", st);
    std::printf("wrote sequence to %s\n", gen_opts.out_dir.c_str());
    return kExitOk;
  }
  if (rsync->parsed()) return run_command(sync_opts, false);
  if (rasync->parsed()) return run_command(async_opts, true);
  if (sweep->parsed()) {
    ConfigHandle cfg;
    amde_status st = apply_options(cfg, sweep_opts);
    if (st != AMDE_OK) return report_failure("configuration", st);
    if (sweep_opts.out_dir.empty()) {
      std::fprintf(stderr, "asyncmde: sweep-lag requires --out\n");
      return kExitConfig;
    }
    st = amde_sweep_lag(cfg.ptr, sweep_opts.out_dir.c_str());
    if (st != AMDE_OK) return report_failure("sweep-lag", st);
    std::printf("wrote sweep CSVs to %s\n", sweep_opts.out_dir.c_str());
    return kExitOk;
  }
  if (bench->parsed()) {
    ConfigHandle cfg;
    amde_status st = apply_options(cfg, bench_opts);
    if (st != AMDE_OK) return report_failure("configuration", st);
    char report[2048];
    st = amde_bench_cache(cfg.ptr, report, sizeof(report));
    std::fputs(report, stdout);
    if (st != AMDE_OK) return report_failure("bench-cache", st);
    return kExitOk;
  }
  return kExitConfig;
}
