#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "amde/cache.hpp"
#include "amde/metrics.hpp"
#include "amde/modulator.hpp"
#include "amde/projector.hpp"
#include "amde/smu.hpp"
#include "amde/synthworld.hpp"

namespace amde {

enum class TrustMode {
  Reference,  // deterministic feature-distance modulator
  Conv,       // learned-style conv gating networks h1/h4
  Override,   // constant trust everywhere (ablation hook)
};

struct PipelineConfig {
  ProjectorParams projector;
  double gate_temperature = 4.0;
  double smoothing_beta = 0.5;
  TrustMode trust_mode = TrustMode::Reference;
  double refmod_a = 4.5;  // trust ceiling sigma(a) when nothing changes
  double refmod_b = 19.0; // distance sensitivity, calibrated on the drift world
  Conv3x3Params h1;             // Conv mode only
  Conv3x3Params h4;
  double trust_override = 0.0;  // Override mode only, in [0,1]
  Matrix encoding;              // channels x 3, drives the readout decoder
  ReadoutParams readout;
  int out_height = 0;
  int out_width = 0;
  double fastpath_threshold = 0.5;

  void validate() const;
};

// Default pipeline for a synthetic sequence: identity projector at the
// sequence's level sizes and a decoder built from its encoding matrix.
PipelineConfig default_pipeline(const SequenceData& data);

struct FrameResult {
  std::int64_t frame = 0;
  std::int64_t lag = 0;             // frames since the memory's source frame
  std::uint64_t cache_version = 0;  // version the memory derives from
  double mean_trust = 0.0;          // mean of the smoothed layer-1 field
  double fastpath_pct = 0.0;        // fraction of layer-1 trust below threshold
  double fast_start_ms = 0.0;
  double fast_end_ms = 0.0;
  DepthMap prediction;
  bool has_metrics = false;
  FrameMetrics metrics;  // aligned, vs ground truth
};

// The per-frame inference loop. Owns the working memory, the previous
// frame's projected observations, and the trust smoothing state. Never
// touches the slow path; refreshes arrive via adopt_refresh.
class FastPath {
 public:
  explicit FastPath(const PipelineConfig& cfg);

  bool initialized() const { return initialized_; }

  // Overwrite memory wholesale with foundation-quality features produced
  // from source_bundle's frame. Previous-frame features and the smoothing
  // state restart at that frame.
  void adopt_refresh(const std::array<FeatureMap, 4>& foundation,
                     const FrameBundle& source_bundle, std::uint64_t cache_version);

  FrameResult step(const FrameBundle& frame);

  const MemoryPyramid& memory() const { return mem_; }
  std::int64_t memory_source_frame() const { return mem_source_; }
  std::uint64_t cache_version() const { return cache_version_; }

 private:
  std::array<FeatureMap, 4> project_all(const std::array<FeatureMap, 4>& enc) const;
  FeatureMap trust_at_level(const FeatureMap& prev, const FeatureMap& curr) const;

  PipelineConfig cfg_;
  Decoder decoder_;
  MemoryPyramid mem_;
  std::array<FeatureMap, 4> prev_proj_;
  SmoothingState smooth_;
  std::int64_t mem_source_ = -1;
  std::uint64_t cache_version_ = 0;
  bool initialized_ = false;
};

enum class RunMode { SyncReplay, Async };

struct RunConfig {
  RunMode mode = RunMode::SyncReplay;
  int refresh_interval = 10;      // sync mode, frames
  double slow_latency_ms = 16.6;  // async mode
  double fast_latency_ms = 4.2;
  bool virtual_clock = true;      // deterministic simulated time
  std::int64_t slow_stall_after = -1;  // stop slow publishes after k (-1 = never)
  bool compute_metrics = true;

  void validate() const;
};

struct RefreshEvent {
  std::int64_t adopt_frame = 0;
  std::int64_t source_frame = 0;
};

struct RunOutput {
  std::vector<FrameResult> frames;
  std::vector<RefreshEvent> refreshes;  // includes the frame-0 bootstrap
};

// Deterministic single-threaded replay with refreshes at the given frames.
// Every run over the same inputs is bit-identical.
RunOutput run_with_schedule(const PipelineConfig& pipeline_cfg, const RunConfig& run_cfg,
                            const SequenceData& data,
                            const std::vector<RefreshEvent>& schedule);

// Frame 0 and every refresh_interval-th frame refresh memory from their own
// frame's foundation features before fast-path inference.
RunOutput run_sync(const PipelineConfig& pipeline_cfg, const RunConfig& run_cfg,
                   const SequenceData& data);

// Dual-rate execution. The slow path repeatedly picks the next frame to
// arrive, spends slow_latency on it, and publishes the foundation snapshot
// to the cache; the fast path paces at fast_latency per frame and adopts
// the newest published snapshot at frame boundaries. With the virtual
// clock this is a deterministic discrete-event simulation; wall-clock mode
// runs two real threads and carries no bit-exactness guarantee.
RunOutput run_async(const PipelineConfig& pipeline_cfg, const RunConfig& run_cfg,
                    const SequenceData& data);

// Expected refresh interval from the two path rates (frames per refresh).
double effective_interval(double fast_rate_hz, double slow_rate_hz);

// Mean adoption lag over all refreshes after the frame-0 bootstrap.
double mean_adoption_lag(const RunOutput& run);

// One key=value record per frame; metric fields appear when present.
void write_run_log(const RunOutput& run, const std::string& path);

// Bin per-frame results by lag. Lags at or beyond `bins` raise an error.
LagProfile lag_profile_from_run(const RunOutput& run, int bins);

}  // namespace amde
