#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "amde/config.hpp"
#include "amde/runtime.hpp"
#include "amde/synthworld.hpp"

namespace amde {

// Typed views over the flat config. Each builder fully validates its slice
// so subcommands fail before any side effect.
SceneConfig scene_from_config(const Config& cfg);
RunConfig run_from_config(const Config& cfg);

// Scene-independent pipeline knobs; the per-sequence parts (projector
// sizes, encoding) are bound by build_pipeline.
struct PipelineSettings {
  double gate_temperature = 4.0;
  double smoothing_beta = 0.5;
  TrustMode trust_mode = TrustMode::Reference;
  double refmod_a = 4.5;
  double refmod_b = 19.0;
  double trust_override = 0.0;
  double fastpath_threshold = 0.5;
  std::string h1_weights_path;
  std::string h4_weights_path;
  std::array<double, 4> level_weights{0.4, 0.3, 0.2, 0.1};
};
PipelineSettings pipeline_from_config(const Config& cfg);
PipelineConfig build_pipeline(const SequenceData& data, const PipelineSettings& s);

// Load run.sequence_dir when set, otherwise generate run.frames frames.
SequenceData obtain_sequence(const Config& cfg);

// ---------------------------------------------------------------------------
// Lag sweep (degradation curves): per seed, a sync run at the configured
// refresh interval plus an encoder-only bound run (trust forced to 0).
// ---------------------------------------------------------------------------

struct SweepConfig {
  int seed_count = 20;
  std::uint64_t base_seed = 1;
};
SweepConfig sweep_from_config(const Config& cfg);

struct SweepData {
  int bins = 0;
  std::vector<std::int64_t> lag;       // populated lags, ascending
  std::vector<double> mean_absrel;     // cross-seed mean per lag
  std::vector<double> mean_rmse;
  std::vector<double> mean_delta1;
  std::vector<double> mean_trust;
  std::vector<double> mean_fastpath;
  double encoder_only_absrel = 0.0;    // cross-seed mean of the bound runs
  std::vector<std::string> per_seed_csv;
};

SweepData run_sweep(const Config& cfg);

// Runs the sweep and writes lag_seed<k>.csv per seed plus lag_mean.csv
// (with a trailing encoder_only row) into out_dir.
void sweep_lag(const Config& cfg, const std::string& out_dir);

// ---------------------------------------------------------------------------
// Cache benchmark: publish/read throughput and torn-read verification.
// The payload is a pure function of the version, so the reader re-derives
// the expected checksum for every snapshot it observes.
// ---------------------------------------------------------------------------

struct BenchConfig {
  std::int64_t iterations = 100000;  // reads
  std::int64_t publishes = 10000;
  int channels = 2;
  int base_size = 8;
  bool concurrent = true;

  void validate() const;
};
BenchConfig bench_from_config(const Config& cfg);

struct BenchReport {
  std::int64_t reads = 0;
  std::int64_t publishes = 0;
  std::int64_t empty_reads = 0;
  std::int64_t torn_reads = 0;
  double read_per_sec = 0.0;
  double publish_per_sec = 0.0;
  double max_read_us = 0.0;

  std::string to_string() const;
};

BenchReport bench_cache(const BenchConfig& cfg);

// Deterministic benchmark payload for a given version.
MemoryPyramid bench_payload(std::uint64_t version, int channels, int base_size);

// ---------------------------------------------------------------------------
// Subcommand bodies shared by the C API and the CLI.
// ---------------------------------------------------------------------------

void cli_generate(const Config& cfg, const std::string& out_dir);
RunOutput cli_run(const Config& cfg, RunMode mode, const SequenceData& data,
                  const std::string& out_dir);  // writes run_log.txt + lag.csv

}  // namespace amde
