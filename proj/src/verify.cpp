#include "glckpt/verify.hpp"

#include <random>
#include <string>

#include "glckpt/logstore.hpp"
#include "glckpt/session.hpp"
#include "glckpt/splitproc.hpp"
#include "glckpt/workload.hpp"

namespace glckpt::harness {

namespace {

constexpr size_t kMaxMessages = 10;

void fail(VerifyOutcome& outcome, uint64_t case_index, const std::string& what) {
  ++outcome.failures;
  if (outcome.messages.size() < kMaxMessages) {
    outcome.messages.push_back("case " + std::to_string(case_index) + ": " + what);
  }
}

// One full trip: run a random program with a checkpoint in the middle,
// restore from serialized bytes under a different driver seed, finish the
// program, and compare against the same program run uninterrupted. Checks
// every promise that falls out along the way. Throws on the first violation.
void run_case(uint64_t case_seed) {
  std::mt19937_64 rng(case_seed);
  size_t call_count = 30 + rng() % 200;
  uint64_t plan_seed = rng();
  uint64_t seed_a = rng() % 1000;
  uint64_t seed_b = seed_a + 1 + rng() % 1000;
  size_t split = call_count / 4 + rng() % (call_count / 2 + 1);
  bool prune = rng() % 2 == 0;

  RandomPlan plan = plan_random_program(plan_seed, call_count);

  // Reference: the same program, never interrupted.
  session::Session ref = session::Session::start({.driver_seed = seed_a, .fb_size = {}});
  SessionSurface ref_surface(ref);
  PlanCursor ref_cursor;
  run_plan(plan, ref_surface, ref_cursor, plan.calls.size());
  uint64_t want = ref.combined_framebuffer_hash();

  session::Session s = session::Session::start({.driver_seed = seed_a, .fb_size = {}});
  SessionSurface surface(s);
  PlanCursor cursor;
  run_plan(plan, surface, cursor, split);
  uint64_t pre_hash = s.combined_framebuffer_hash();
  auto pre_virtuals = [&](const interpose::VirtualIdTable& vids) {
    std::vector<std::vector<uint32_t>> all;
    for (size_t i = 0; i < interpose::kIdSpaceCount; ++i) {
      all.push_back(vids.virtuals(static_cast<interpose::IdSpace>(i)));
    }
    return all;
  };
  std::vector<std::vector<uint32_t>> want_virtuals = pre_virtuals(s.vids());

  splitproc::CheckpointImage image = s.checkpoint(prune);

  for (const splitproc::ImageRegion& region : image.upper_regions) {
    if (region.label.rfind("sys/", 0) == 0) {
      throw Error(Errc::BadValue, "lower-half region leaked into the image: " + region.label);
    }
  }

  std::vector<uint8_t> bytes = image.serialize();
  splitproc::CheckpointImage loaded = splitproc::CheckpointImage::deserialize(bytes);
  if (!(loaded == image) || loaded.serialize() != bytes) {
    throw Error(Errc::BadValue, "image round trip is not byte-stable");
  }

  std::vector<uint8_t> corrupted = bytes;
  corrupted[rng() % corrupted.size()] ^= static_cast<uint8_t>(1 + rng() % 255);
  bool detected = false;
  try {
    splitproc::CheckpointImage::deserialize(corrupted);
  } catch (const Error&) {
    detected = true;
  }
  if (!detected) throw Error(Errc::BadValue, "single-byte corruption went undetected");

  session::Session restored = session::Session::restore(loaded, seed_b);
  if (restored.combined_framebuffer_hash() != pre_hash) {
    throw Error(Errc::BadValue, "restored pixels differ from the pre-checkpoint pixels");
  }
  if (pre_virtuals(restored.vids()) != want_virtuals) {
    throw Error(Errc::BadValue, "virtual id sequence changed across restore");
  }

  SessionSurface restored_surface(restored);
  run_plan(plan, restored_surface, cursor, plan.calls.size());
  if (restored.combined_framebuffer_hash() != want) {
    throw Error(Errc::BadValue, "interrupted run diverged from the uninterrupted run");
  }

  // Prune soundness on the full recorded log, independent of the image.
  const logstore::CallLog& full_log = ref.log();
  auto [pruned, report] = logstore::prune(full_log, minigl::FbSize{});
  minigl::Driver replay_a(seed_a);
  minigl::Driver replay_b(seed_a);
  interpose::VirtualIdTable vids_a, vids_b;
  logstore::replay(full_log, replay_a, vids_a);
  logstore::replay(pruned, replay_b, vids_b);
  if (!(logstore::virtual_view(replay_a, vids_a) == logstore::virtual_view(replay_b, vids_b))) {
    throw Error(Errc::BadValue, "pruned log replays to a different state");
  }
  if (report.after_len + report.removed_create_destroy_pairs + report.removed_shadowed_state_sets +
          report.removed_predraw_calls !=
      report.before_len) {
    throw Error(Errc::BadValue, "prune counters do not reconcile");
  }
}

}  // namespace

VerifyOutcome verify_properties(uint64_t seed, uint64_t cases) {
  VerifyOutcome outcome;
  outcome.cases = cases;
  std::mt19937_64 rng(seed);
  for (uint64_t i = 0; i < cases; ++i) {
    uint64_t case_seed = rng();
    try {
      run_case(case_seed);
    } catch (const Error& e) {
      fail(outcome, i, e.what());
    } catch (const std::exception& e) {
      fail(outcome, i, std::string("unexpected: ") + e.what());
    }
  }
  return outcome;
}

}  // namespace glckpt::harness
