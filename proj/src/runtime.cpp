#include "amde/runtime.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

#include "amde/errors.hpp"

namespace amde {

void PipelineConfig::validate() const {
  if (!(gate_temperature > 0.0)) {
    throw InvalidArgumentError("PipelineConfig: gate temperature must be > 0");
  }
  if (!(smoothing_beta > 0.0 && smoothing_beta <= 1.0)) {
    throw InvalidArgumentError("PipelineConfig: smoothing beta must be in (0,1]");
  }
  if (trust_mode == TrustMode::Override &&
      !(trust_override >= 0.0 && trust_override <= 1.0)) {
    throw InvalidArgumentError("PipelineConfig: trust override must be in [0,1]");
  }
  if (!(refmod_b >= 0.0)) {
    throw InvalidArgumentError("PipelineConfig: reference modulator b must be >= 0");
  }
  if (!(fastpath_threshold > 0.0 && fastpath_threshold < 1.0)) {
    throw InvalidArgumentError("PipelineConfig: fastpath threshold must be in (0,1)");
  }
  if (out_height < 1 || out_width < 1) {
    throw InvalidArgumentError("PipelineConfig: bad output size");
  }
}

PipelineConfig default_pipeline(const SequenceData& data) {
  if (data.frames.empty()) {
    throw InvalidArgumentError("default_pipeline: empty sequence");
  }
  std::array<std::pair<int, int>, 4> sizes;
  for (int l = 0; l < 4; ++l) {
    sizes[l] = {data.frames[0].foundation[l].height, data.frames[0].foundation[l].width};
  }
  PipelineConfig cfg;
  cfg.projector = ProjectorParams::identity(data.scene.channels, sizes);
  cfg.encoding = data.encoding;
  cfg.out_height = data.scene.height;
  cfg.out_width = data.scene.width;
  return cfg;
}

FastPath::FastPath(const PipelineConfig& cfg)
    : cfg_(cfg), decoder_(cfg.encoding, cfg.readout, cfg.out_height, cfg.out_width) {
  cfg_.validate();
}

std::array<FeatureMap, 4> FastPath::project_all(
    const std::array<FeatureMap, 4>& enc) const {
  std::array<FeatureMap, 4> proj;
  for (int l = 1; l <= 4; ++l) {
    proj[l - 1] = project(l, enc[l - 1], cfg_.projector);
  }
  return proj;
}

FeatureMap FastPath::trust_at_level(const FeatureMap& prev, const FeatureMap& curr) const {
  switch (cfg_.trust_mode) {
    case TrustMode::Reference:
      return reference_modulator(prev, curr, cfg_.refmod_a, cfg_.refmod_b);
    case TrustMode::Conv:
      return scale_trust(prev, curr, curr.level == 1 ? cfg_.h1 : cfg_.h4);
    case TrustMode::Override: {
      FeatureMap t(1, curr.height, curr.width, curr.level);
      std::fill(t.data.begin(), t.data.end(), cfg_.trust_override);
      return t;
    }
  }
  throw StateError("trust_at_level: unreachable");
}

void FastPath::adopt_refresh(const std::array<FeatureMap, 4>& foundation,
                             const FrameBundle& source_bundle,
                             std::uint64_t cache_version) {
  if (initialized_) {
    mem_ = refresh(mem_, foundation);
  } else {
    mem_ = init_memory(foundation);
    initialized_ = true;
  }
  prev_proj_ = project_all(source_bundle.encoder);
  smooth_ = SmoothingState{};
  mem_source_ = source_bundle.frame;
  cache_version_ = cache_version;
}

FrameResult FastPath::step(const FrameBundle& frame) {
  if (!initialized_) {
    throw StateError("FastPath::step: memory not initialized (no refresh adopted yet)");
  }
  const std::array<FeatureMap, 4> proj = project_all(frame.encoder);

  ModulationField raw;
  if (cfg_.trust_mode == TrustMode::Override) {
    for (int l = 0; l < 4; ++l) {
      FeatureMap t(1, proj[l].height, proj[l].width, l + 1);
      std::fill(t.data.begin(), t.data.end(), cfg_.trust_override);
      raw.levels[l] = std::move(t);
    }
  } else {
    const FeatureMap t_l1 = trust_at_level(prev_proj_[0], proj[0]);
    const FeatureMap t_l4 = trust_at_level(prev_proj_[3], proj[3]);
    const FeatureMap t_final = semantic_gate(t_l1, t_l4, cfg_.gate_temperature);
    std::array<std::pair<int, int>, 4> sizes;
    for (int l = 0; l < 4; ++l) sizes[l] = {proj[l].height, proj[l].width};
    raw = distribute(t_final, sizes);
  }

  const ModulationField trust = smooth(raw, smooth_, cfg_.smoothing_beta);
  const std::array<FeatureMap, 4> fused = fuse(mem_, proj, trust);

  FrameResult result;
  result.frame = frame.frame;
  result.lag = frame.frame - mem_source_;
  if (result.lag < 0) {
    throw InvariantViolationError("FastPath::step: negative lag (memory from frame " +
                                  std::to_string(mem_source_) + ", stepping frame " +
                                  std::to_string(frame.frame) + ")");
  }
  result.cache_version = cache_version_;
  result.prediction = decoder_.decode(fused);

  const FeatureMap& t1 = trust.level(1);
  double mean_t = 0.0;
  for (double v : t1.data) mean_t += v;
  result.mean_trust = mean_t / static_cast<double>(t1.data.size());
  result.fastpath_pct = fastpath_fraction(trust, cfg_.fastpath_threshold);

  mem_ = commit(mem_, fused);
  prev_proj_ = proj;
  return result;
}

void RunConfig::validate() const {
  if (refresh_interval < 1) {
    throw InvalidArgumentError("RunConfig: refresh interval must be >= 1");
  }
  if (!(slow_latency_ms > 0.0) || !(fast_latency_ms > 0.0)) {
    throw InvalidArgumentError("RunConfig: latencies must be > 0");
  }
}

namespace {

void attach_metrics(FrameResult& result, const FrameBundle& bundle, bool compute) {
  if (!compute || bundle.ground_truth.data.empty()) return;
  result.metrics = aligned_metrics(result.prediction, bundle.ground_truth);
  result.has_metrics = true;
}

}  // namespace

RunOutput run_with_schedule(const PipelineConfig& pipeline_cfg, const RunConfig& run_cfg,
                            const SequenceData& data,
                            const std::vector<RefreshEvent>& schedule) {
  run_cfg.validate();
  if (data.frames.empty()) {
    throw InvalidArgumentError("run_with_schedule: empty sequence");
  }
  FastPath fast(pipeline_cfg);
  RunOutput out;
  out.frames.reserve(data.frames.size());
  std::size_t next_refresh = 0;
  std::uint64_t version = 0;
  for (std::size_t t = 0; t < data.frames.size(); ++t) {
    while (next_refresh < schedule.size() &&
           schedule[next_refresh].adopt_frame == static_cast<std::int64_t>(t)) {
      const RefreshEvent& ev = schedule[next_refresh];
      if (ev.source_frame < 0 ||
          ev.source_frame >= static_cast<std::int64_t>(data.frames.size())) {
        throw InvalidArgumentError("run_with_schedule: refresh source out of range");
      }
      const FrameBundle& src = data.frames[static_cast<std::size_t>(ev.source_frame)];
      fast.adopt_refresh(src.foundation, src, ++version);
      out.refreshes.push_back(ev);
      ++next_refresh;
    }
    FrameResult result = fast.step(data.frames[t]);
    result.fast_start_ms = static_cast<double>(t) * run_cfg.fast_latency_ms;
    result.fast_end_ms = result.fast_start_ms + run_cfg.fast_latency_ms;
    attach_metrics(result, data.frames[t], run_cfg.compute_metrics);
    out.frames.push_back(std::move(result));
  }
  return out;
}

RunOutput run_sync(const PipelineConfig& pipeline_cfg, const RunConfig& run_cfg,
                   const SequenceData& data) {
  run_cfg.validate();
  std::vector<RefreshEvent> schedule;
  for (std::int64_t t = 0; t < static_cast<std::int64_t>(data.frames.size());
       t += run_cfg.refresh_interval) {
    schedule.push_back({t, t});
  }
  return run_with_schedule(pipeline_cfg, run_cfg, data, schedule);
}

namespace {

// Discrete-event simulation of the dual-rate system on a virtual clock.
// Frame k arrives at k * L_fast; the slow path starts on the next frame to
// arrive once it is free, spends L_slow on it, and publishes. Fully
// deterministic.
RunOutput run_async_virtual(const PipelineConfig& pipeline_cfg, const RunConfig& run_cfg,
                            const SequenceData& data) {
  const double lf = run_cfg.fast_latency_ms;
  const double ls = run_cfg.slow_latency_ms;
  const std::int64_t frames = static_cast<std::int64_t>(data.frames.size());

  FeatureCache cache(init_memory(data.frames[0].foundation));

  struct Publish {
    double time = 0.0;
    std::int64_t source = 0;
  };
  std::vector<Publish> publishes;
  publishes.push_back({0.0, 0});  // initialization: blocking foundation pass on frame 0
  double slow_free = 0.0;
  std::int64_t done = 0;
  while (run_cfg.slow_stall_after < 0 || done < run_cfg.slow_stall_after) {
    const std::int64_t grab =
        static_cast<std::int64_t>(std::ceil(slow_free / lf - 1e-12));
    if (grab >= frames) break;
    const double start = static_cast<double>(grab) * lf;
    const double finish = start + ls;
    publishes.push_back({finish, grab});
    slow_free = finish;
    ++done;
  }

  FastPath fast(pipeline_cfg);
  RunOutput out;
  out.frames.reserve(static_cast<std::size_t>(frames));
  std::size_t next_pub = 0;
  CacheSlot slot;
  for (std::int64_t t = 0; t < frames; ++t) {
    const double frame_start = static_cast<double>(t) * lf;
    while (next_pub < publishes.size() &&
           publishes[next_pub].time <= frame_start + 1e-12) {
      const Publish& p = publishes[next_pub];
      cache.publish(init_memory(
                        data.frames[static_cast<std::size_t>(p.source)].foundation),
                    p.source);
      ++next_pub;
    }
    if (cache.latest_version() > fast.cache_version() && cache.read_latest(slot) &&
        slot.version > fast.cache_version()) {
      if (slot.checksum != cache_checksum(slot.snapshot, slot.version, slot.source_frame)) {
        throw InvariantViolationError("run_async: snapshot checksum mismatch");
      }
      const FrameBundle& src = data.frames[static_cast<std::size_t>(slot.source_frame)];
      fast.adopt_refresh(slot.snapshot.levels, src, slot.version);
      out.refreshes.push_back({t, slot.source_frame});
    }
    if (!fast.initialized()) {
      throw StateError("run_async: fast path reached frame 0 with an empty cache");
    }
    FrameResult result = fast.step(data.frames[static_cast<std::size_t>(t)]);
    result.fast_start_ms = frame_start;
    result.fast_end_ms = frame_start + lf;
    attach_metrics(result, data.frames[static_cast<std::size_t>(t)],
                   run_cfg.compute_metrics);
    out.frames.push_back(std::move(result));
  }
  return out;
}

// Wall-clock variant: a real slow-path thread publishing through the cache
// while the caller's thread paces the fast path. Demonstration mode; the
// adoption schedule depends on real timing.
RunOutput run_async_wallclock(const PipelineConfig& pipeline_cfg, const RunConfig& run_cfg,
                              const SequenceData& data) {
  using clock = std::chrono::steady_clock;
  const auto lf = std::chrono::duration<double, std::milli>(run_cfg.fast_latency_ms);
  const auto ls = std::chrono::duration<double, std::milli>(run_cfg.slow_latency_ms);
  const std::int64_t frames = static_cast<std::int64_t>(data.frames.size());

  FeatureCache cache(init_memory(data.frames[0].foundation));
  cache.publish(init_memory(data.frames[0].foundation), 0);  // blocking init

  std::atomic<bool> stop{false};
  const auto epoch = clock::now();

  std::thread slow([&] {
    std::int64_t done = 0;
    while (!stop.load(std::memory_order_relaxed)) {
      if (run_cfg.slow_stall_after >= 0 && done >= run_cfg.slow_stall_after) return;
      const auto now = clock::now();
      const double elapsed_ms =
          std::chrono::duration<double, std::milli>(now - epoch).count();
      std::int64_t grab = static_cast<std::int64_t>(
          std::ceil(elapsed_ms / run_cfg.fast_latency_ms - 1e-12));
      if (grab >= frames) return;
      const auto arrival =
          epoch + std::chrono::duration_cast<clock::duration>(lf * static_cast<double>(grab));
      std::this_thread::sleep_until(arrival);
      std::this_thread::sleep_for(std::chrono::duration_cast<clock::duration>(ls));
      if (stop.load(std::memory_order_relaxed)) return;
      cache.publish(
          init_memory(data.frames[static_cast<std::size_t>(grab)].foundation), grab);
      ++done;
    }
  });

  FastPath fast(pipeline_cfg);
  RunOutput out;
  out.frames.reserve(static_cast<std::size_t>(frames));
  CacheSlot slot;
  for (std::int64_t t = 0; t < frames; ++t) {
    const auto deadline =
        epoch + std::chrono::duration_cast<clock::duration>(lf * static_cast<double>(t));
    std::this_thread::sleep_until(deadline);
    const double start_ms =
        std::chrono::duration<double, std::milli>(clock::now() - epoch).count();
    if (cache.latest_version() > fast.cache_version() && cache.read_latest(slot) &&
        slot.version > fast.cache_version()) {
      if (slot.checksum != cache_checksum(slot.snapshot, slot.version, slot.source_frame)) {
        throw InvariantViolationError("run_async: snapshot checksum mismatch");
      }
      const FrameBundle& src = data.frames[static_cast<std::size_t>(slot.source_frame)];
      fast.adopt_refresh(slot.snapshot.levels, src, slot.version);
      out.refreshes.push_back({t, slot.source_frame});
    }
    FrameResult result = fast.step(data.frames[static_cast<std::size_t>(t)]);
    result.fast_start_ms = start_ms;
    result.fast_end_ms =
        std::chrono::duration<double, std::milli>(clock::now() - epoch).count();
    attach_metrics(result, data.frames[static_cast<std::size_t>(t)],
                   run_cfg.compute_metrics);
    out.frames.push_back(std::move(result));
  }
  stop.store(true, std::memory_order_relaxed);
  slow.join();
  return out;
}

}  // namespace

RunOutput run_async(const PipelineConfig& pipeline_cfg, const RunConfig& run_cfg,
                    const SequenceData& data) {
  run_cfg.validate();
  if (data.frames.empty()) {
    throw InvalidArgumentError("run_async: empty sequence");
  }
  return run_cfg.virtual_clock ? run_async_virtual(pipeline_cfg, run_cfg, data)
                               : run_async_wallclock(pipeline_cfg, run_cfg, data);
}

double effective_interval(double fast_rate_hz, double slow_rate_hz) {
  if (!(fast_rate_hz > 0.0) || !(slow_rate_hz > 0.0)) {
    throw InvalidArgumentError("effective_interval: rates must be > 0");
  }
  return fast_rate_hz / slow_rate_hz;
}

double mean_adoption_lag(const RunOutput& run) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < run.refreshes.size(); ++i) {
    if (run.refreshes[i].adopt_frame == 0) continue;  // bootstrap
    sum += static_cast<double>(run.refreshes[i].adopt_frame -
                               run.refreshes[i].source_frame);
    ++n;
  }
  if (n == 0) return 0.0;
  return sum / static_cast<double>(n);
}

void write_run_log(const RunOutput& run, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("write_run_log: cannot open " + path);
  char buf[512];
  for (const FrameResult& r : run.frames) {
    int n = std::snprintf(buf, sizeof(buf),
                          "frame=%lld lag=%lld cache_version=%llu mean_t=%.6g "
                          "fastpath_pct=%.6g",
                          static_cast<long long>(r.frame), static_cast<long long>(r.lag),
                          static_cast<unsigned long long>(r.cache_version), r.mean_trust,
                          r.fastpath_pct);
    os.write(buf, n);
    if (r.has_metrics) {
      n = std::snprintf(buf, sizeof(buf), " absrel=%.6g rmse=%.6g delta1=%.6g",
                        r.metrics.absrel, r.metrics.rmse, r.metrics.delta1);
      os.write(buf, n);
    }
    os.put('\n');
  }
  if (!os) throw IoError("write_run_log: write failed for " + path);
}

LagProfile lag_profile_from_run(const RunOutput& run, int bins) {
  LagProfile profile(bins);
  for (const FrameResult& r : run.frames) {
    if (!r.has_metrics) continue;
    profile.accumulate(r.lag, r.metrics, r.mean_trust, r.fastpath_pct);
  }
  return profile;
}

}  // namespace amde
