#include "asyncmde.h"

#include <cstdio>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include "amde/config.hpp"
#include "amde/driver.hpp"
#include "amde/errors.hpp"
#include "amde/metrics.hpp"
#include "amde/runtime.hpp"
#include "amde/synthworld.hpp"

namespace {

thread_local std::string g_last_error;

amde_status status_from(amde::Status s) {
  switch (s) {
    case amde::Status::Ok: return AMDE_OK;
    case amde::Status::InvalidArgument: return AMDE_ERR_INVALID_ARGUMENT;
    case amde::Status::ConfigError: return AMDE_ERR_CONFIG;
    case amde::Status::FormatError: return AMDE_ERR_FORMAT;
    case amde::Status::TruncationError: return AMDE_ERR_TRUNCATED;
    case amde::Status::IoError: return AMDE_ERR_IO;
    case amde::Status::StateError: return AMDE_ERR_STATE;
    case amde::Status::DegenerateInput: return AMDE_ERR_DEGENERATE;
    case amde::Status::InvariantViolation: return AMDE_ERR_INVARIANT;
    case amde::Status::Unknown: return AMDE_ERR_UNKNOWN;
  }
  return AMDE_ERR_UNKNOWN;
}

template <typename F>
amde_status guarded(F&& f) {
  try {
    f();
    return AMDE_OK;
  } catch (const amde::Error& e) {
    g_last_error = e.what();
    return status_from(e.status());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return AMDE_ERR_UNKNOWN;
  } catch (...) {
    g_last_error = "unknown error";
    return AMDE_ERR_UNKNOWN;
  }
}

amde_status fail_null(const char* what) {
  g_last_error = std::string(what) + ": null argument";
  return AMDE_ERR_INVALID_ARGUMENT;
}

}  // namespace

struct amde_config {
  amde::Config cfg;
};

struct amde_sequence {
  amde::SequenceData data;
};

struct amde_run {
  amde::RunOutput output;
};

extern "C" {

const char* amde_version_string(void) { return "asyncmde 1.0.0"; }

const char* amde_last_error(void) { return g_last_error.c_str(); }

amde_config* amde_config_create(void) { return new (std::nothrow) amde_config(); }

void amde_config_destroy(amde_config* cfg) { delete cfg; }

amde_status amde_config_load_file(amde_config* cfg, const char* path) {
  if (!cfg || !path) return fail_null("amde_config_load_file");
  return guarded([&] { cfg->cfg.load_file(path); });
}

amde_status amde_config_set(amde_config* cfg, const char* key, const char* value) {
  if (!cfg || !key || !value) return fail_null("amde_config_set");
  return guarded([&] { cfg->cfg.set(key, value); });
}

amde_status amde_config_get(const amde_config* cfg, const char* key, char* buf,
                            size_t buf_len) {
  if (!cfg || !key || !buf || buf_len == 0) return fail_null("amde_config_get");
  return guarded([&] {
    const std::string value = cfg->cfg.get_string(key);
    std::strncpy(buf, value.c_str(), buf_len - 1);
    buf[buf_len - 1] = '\0';
  });
}

const char* amde_config_describe_keys(void) {
  static const std::string doc = amde::Config::describe_keys();
  return doc.c_str();
}

amde_status amde_sequence_generate(const amde_config* cfg, amde_sequence** out) {
  if (!cfg || !out) return fail_null("amde_sequence_generate");
  return guarded([&] {
    auto seq = std::make_unique<amde_sequence>();
    const amde::SceneConfig scene = amde::scene_from_config(cfg->cfg);
    const std::int64_t frames = cfg->cfg.get_int("run.frames");
    if (frames < 1) throw amde::ConfigError("run.frames must be >= 1");
    seq->data = amde::make_sequence(scene, frames);
    *out = seq.release();
  });
}

amde_status amde_sequence_load(const char* dir, amde_sequence** out) {
  if (!dir || !out) return fail_null("amde_sequence_load");
  return guarded([&] {
    auto seq = std::make_unique<amde_sequence>();
    seq->data = amde::load_sequence(dir);
    *out = seq.release();
  });
}

amde_status amde_sequence_save(const amde_sequence* seq, const char* dir) {
  if (!seq || !dir) return fail_null("amde_sequence_save");
  return guarded([&] { amde::save_sequence(dir, seq->data); });
}

int64_t amde_sequence_length(const amde_sequence* seq) {
  return seq ? static_cast<int64_t>(seq->data.frames.size()) : 0;
}

void amde_sequence_destroy(amde_sequence* seq) { delete seq; }

namespace {

amde_status run_impl(const amde_config* cfg, const amde_sequence* seq,
                     amde::RunMode mode, amde_run** out) {
  if (!cfg || !seq || !out) return fail_null("amde_run");
  return guarded([&] {
    auto run = std::make_unique<amde_run>();
    const amde::RunConfig run_cfg = [&] {
      amde::RunConfig rc = amde::run_from_config(cfg->cfg);
      rc.mode = mode;
      return rc;
    }();
    const amde::PipelineConfig pipeline =
        amde::build_pipeline(seq->data, amde::pipeline_from_config(cfg->cfg));
    run->output = mode == amde::RunMode::SyncReplay
                      ? amde::run_sync(pipeline, run_cfg, seq->data)
                      : amde::run_async(pipeline, run_cfg, seq->data);
    *out = run.release();
  });
}

}  // namespace

amde_status amde_run_sync(const amde_config* cfg, const amde_sequence* seq,
                          amde_run** out) {
  return run_impl(cfg, seq, amde::RunMode::SyncReplay, out);
}

amde_status amde_run_async(const amde_config* cfg, const amde_sequence* seq,
                           amde_run** out) {
  return run_impl(cfg, seq, amde::RunMode::Async, out);
}

int64_t amde_run_frame_count(const amde_run* run) {
  return run ? static_cast<int64_t>(run->output.frames.size()) : 0;
}

amde_status amde_run_frame(const amde_run* run, int64_t index, amde_frame_info* out) {
  if (!run || !out) return fail_null("amde_run_frame");
  return guarded([&] {
    if (index < 0 || index >= static_cast<int64_t>(run->output.frames.size())) {
      throw amde::InvalidArgumentError("amde_run_frame: index out of range");
    }
    const amde::FrameResult& r = run->output.frames[static_cast<std::size_t>(index)];
    out->frame = r.frame;
    out->lag = r.lag;
    out->cache_version = r.cache_version;
    out->mean_trust = r.mean_trust;
    out->fastpath_pct = r.fastpath_pct;
    out->fast_start_ms = r.fast_start_ms;
    out->fast_end_ms = r.fast_end_ms;
    out->has_metrics = r.has_metrics ? 1 : 0;
    out->absrel = r.has_metrics ? r.metrics.absrel : 0.0;
    out->rmse = r.has_metrics ? r.metrics.rmse : 0.0;
    out->delta1 = r.has_metrics ? r.metrics.delta1 : 0.0;
  });
}

amde_status amde_run_cycle_stats(const amde_run* run, amde_cycle_stats* out) {
  if (!run || !out) return fail_null("amde_run_cycle_stats");
  return guarded([&] {
    std::int64_t max_lag = 0;
    for (const amde::FrameResult& r : run->output.frames) {
      if (r.lag > max_lag) max_lag = r.lag;
    }
    const amde::LagProfile profile =
        amde::lag_profile_from_run(run->output, static_cast<int>(max_lag) + 1);
    const auto summary = profile.summarize();
    if (!summary) {
      throw amde::StateError("amde_run_cycle_stats: run carries no metrics");
    }
    const auto& c = summary->cycle_average;
    out->frames = c.count;
    out->absrel = c.absrel;
    out->rmse = c.rmse;
    out->delta1 = c.delta1;
    out->mean_trust = c.mean_trust;
    out->fastpath_pct = c.fastpath_pct;
  });
}

amde_status amde_run_write_log(const amde_run* run, const char* path) {
  if (!run || !path) return fail_null("amde_run_write_log");
  return guarded([&] { amde::write_run_log(run->output, path); });
}

amde_status amde_run_write_lag_csv(const amde_run* run, int bins, const char* path) {
  if (!run || !path) return fail_null("amde_run_write_lag_csv");
  return guarded([&] {
    const amde::LagProfile profile = amde::lag_profile_from_run(run->output, bins);
    const std::string csv = amde::lag_profile_csv(profile);
    std::FILE* f = std::fopen(path, "wb");
    if (!f) throw amde::IoError("amde_run_write_lag_csv: cannot open " + std::string(path));
    const bool ok = std::fwrite(csv.data(), 1, csv.size(), f) == csv.size();
    std::fclose(f);
    if (!ok) throw amde::IoError("amde_run_write_lag_csv: write failed");
  });
}

void amde_run_destroy(amde_run* run) { delete run; }

amde_status amde_generate(const amde_config* cfg, const char* out_dir) {
  if (!cfg || !out_dir) return fail_null("amde_generate");
  return guarded([&] { amde::cli_generate(cfg->cfg, out_dir); });
}

amde_status amde_sweep_lag(const amde_config* cfg, const char* out_dir) {
  if (!cfg || !out_dir) return fail_null("amde_sweep_lag");
  return guarded([&] { amde::sweep_lag(cfg->cfg, out_dir); });
}

amde_status amde_bench_cache(const amde_config* cfg, char* buf, size_t buf_len) {
  if (!cfg || !buf || buf_len == 0) return fail_null("amde_bench_cache");
  amde::BenchReport report;
  const amde_status st = guarded([&] {
    report = amde::bench_cache(amde::bench_from_config(cfg->cfg));
  });
  if (st != AMDE_OK) return st;
  const std::string text = report.to_string();
  std::strncpy(buf, text.c_str(), buf_len - 1);
  buf[buf_len - 1] = '\0';
  if (report.torn_reads > 0) {
    g_last_error = "bench_cache: torn reads detected";
    return AMDE_ERR_INVARIANT;
  }
  return AMDE_OK;
}

amde_status amde_effective_interval(double fast_rate_hz, double slow_rate_hz,
                                    double* out) {
  if (!out) return fail_null("amde_effective_interval");
  return guarded([&] { *out = amde::effective_interval(fast_rate_hz, slow_rate_hz); });
}

}  // extern "C"
