#pragma once

#include <cstdint>
#include <string>

#include "glckpt/logstore.hpp"
#include "glckpt/workload.hpp"

// Timing harness mirroring the two experiments that matter for a
// record-replay engine: what interposition costs while running, and what a
// restore buys over a cold start.

namespace glckpt::harness {

struct BenchReport {
  // bench_overhead
  double baseline_ms = 0.0;    // median bare-driver run
  double interposed_ms = 0.0;  // median full-session run
  double overhead_ratio = 0.0;  // (interposed - baseline) / baseline
  double fps = 0.0;             // frames per second of the interposed run, informational

  // bench_restart
  double coldstart_ms = 0.0;  // synthetic load + full call stream
  double ckpt_ms = 0.0;       // checkpoint + serialize + write to disk
  double restore_ms = 0.0;    // read from disk + deserialize + rebuild session

  uint64_t frames = 0;
  uint64_t log_len = 0;     // calls recorded by the live run
  uint64_t pruned_len = 0;  // calls that made it into the image
};

// Runs the workload `repeats` times against a bare driver and `repeats` times
// through a session, one unmeasured warmup pair first, and reports medians.
// Rounds alternate the two sides; runs never overlap, so they never contend.
// repeats >= 3.
BenchReport bench_overhead(const Workload& w, int repeats);

// Cold start vs restart: run the workload once (paying its synthetic load),
// checkpoint to a file, tear the session down, restore from that file, and
// verify the restored pixels match before reporting. The workload must carry
// a nonzero synthetic load; without one there is nothing to win back.
// Whether restore_ms actually beat coldstart_ms is the caller's check.
BenchReport bench_restart(const Workload& w, bool prune);

}  // namespace glckpt::harness
