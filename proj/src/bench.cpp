#include "glckpt/bench.hpp"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <vector>

#include "glckpt/splitproc.hpp"

namespace glckpt::harness {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

double median(std::vector<double> samples) {
  std::sort(samples.begin(), samples.end());
  size_t n = samples.size();
  return n % 2 == 1 ? samples[n / 2] : (samples[n / 2 - 1] + samples[n / 2]) / 2.0;
}

std::filesystem::path scratch_image_path() {
  return std::filesystem::temp_directory_path() /
         ("glckpt-bench-" + std::to_string(::getpid()) + ".oglc");
}

void write_file(const std::filesystem::path& path, const std::vector<uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::BadValue, "cannot write " + path.string());
}

std::vector<uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw Error(Errc::BadValue, "cannot read " + path.string());
  std::vector<uint8_t> bytes(static_cast<size_t>(in.tellg()));
  in.seekg(0);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  return bytes;
}

}  // namespace

BenchReport bench_overhead(const Workload& w, int repeats) {
  if (repeats < 3) throw Error(Errc::BadValue, "overhead benchmark needs at least 3 repeats");

  BenchReport report;
  report.frames = w.frames;

  auto time_baseline = [&] {
    minigl::Driver driver(w.seed);
    DriverSurface surface(driver);
    Clock::time_point start = Clock::now();
    run_workload(w, surface);
    return ms_since(start);
  };
  auto time_interposed = [&](uint64_t* log_len) {
    session::Session s = session::Session::start({.driver_seed = w.seed, .fb_size = {}});
    SessionSurface surface(s);
    Clock::time_point start = Clock::now();
    run_workload(w, surface);
    double ms = ms_since(start);
    if (log_len != nullptr) *log_len = s.log().size();
    return ms;
  };

  // One warmup pair pays the cold caches and allocator ramp-up. Measured
  // rounds then alternate the two sides, so slow machine-wide drift (frequency
  // scaling, a noisy neighbor) lands on both medians instead of on whichever
  // side happened to run last.
  time_baseline();
  time_interposed(nullptr);

  std::vector<double> baseline, interposed;
  for (int i = 0; i < repeats; ++i) {
    baseline.push_back(time_baseline());
    interposed.push_back(time_interposed(&report.log_len));
  }

  report.baseline_ms = median(std::move(baseline));
  report.interposed_ms = median(std::move(interposed));
  report.overhead_ratio = (report.interposed_ms - report.baseline_ms) / report.baseline_ms;
  if (report.interposed_ms > 0) {
    report.fps = static_cast<double>(w.frames) / (report.interposed_ms / 1000.0);
  }
  report.pruned_len = report.log_len;
  return report;
}

BenchReport bench_restart(const Workload& w, bool prune) {
  if (w.kind != WorkloadKind::ModelLoad) {
    throw Error(Errc::BadValue, "restart benchmark is defined over modelload");
  }
  if (w.synth_ms_per_frame * static_cast<double>(w.frames) <= 0.0) {
    throw Error(Errc::BadValue, "restart benchmark needs a nonzero synthetic load");
  }

  BenchReport report;
  report.frames = w.frames;

  // Cold start: the application pays for the model parse and every call.
  session::Session live = session::Session::start({.driver_seed = w.seed, .fb_size = {}});
  SessionSurface surface(live);
  Clock::time_point start = Clock::now();
  run_workload(w, surface);
  report.coldstart_ms = ms_since(start);
  uint64_t cold_hash = live.combined_framebuffer_hash();
  report.log_len = live.log().size();

  // Checkpoint to disk; the session is frozen and discarded afterwards, so
  // the image file is all that survives, exactly like a process that died.
  std::filesystem::path path = scratch_image_path();
  start = Clock::now();
  splitproc::CheckpointImage image = live.checkpoint(prune);
  write_file(path, image.serialize());
  report.ckpt_ms = ms_since(start);
  report.pruned_len = image.log.size();

  start = Clock::now();
  session::Session restored =
      session::Session::restore(splitproc::CheckpointImage::deserialize(read_file(path)),
                                w.seed + 1);
  report.restore_ms = ms_since(start);
  std::filesystem::remove(path);

  if (restored.combined_framebuffer_hash() != cold_hash) {
    throw Error(Errc::ReplayDivergence, "restored pixels differ from the cold-start run");
  }
  return report;
}

}  // namespace glckpt::harness
