#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "glckpt/bench.hpp"
#include "glckpt/cli.hpp"
#include "glckpt/session.hpp"
#include "glckpt/splitproc.hpp"
#include "glckpt/verify.hpp"
#include "glckpt/workload.hpp"

using namespace glckpt;
using namespace glckpt::harness;

namespace {

Errc thrown_code(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return Errc::BadValue;
}

double ms_elapsed(const std::function<void()>& fn) {
  auto start = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

session::Session start_session(uint64_t driver_seed) {
  return session::Session::start({.driver_seed = driver_seed, .fb_size = {}});
}

uint64_t run_on_fresh_session(const Workload& w, uint64_t driver_seed) {
  session::Session s = start_session(driver_seed);
  SessionSurface surface(s);
  return run_workload(w, surface);
}

uint64_t run_on_fresh_driver(const Workload& w, uint64_t driver_seed) {
  minigl::Driver d(driver_seed);
  DriverSurface surface(d);
  return run_workload(w, surface);
}

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult invoke_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  CliResult r;
  r.code = cli::run_cli(std::move(args), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

// Value of the first `key=` line in CLI output, or "" when absent.
std::string grab(const std::string& text, const std::string& key) {
  std::string haystack = "\n" + text;
  std::string needle = "\n" + key + "=";
  size_t at = haystack.find(needle);
  if (at == std::string::npos) return "";
  size_t start = at + needle.size();
  size_t end = haystack.find('\n', start);
  return haystack.substr(start, end - start);
}

// Clears a variable for the enclosing scope and on the way out, so one test's
// environment never leaks into another.
struct EnvVarGuard {
  explicit EnvVarGuard(const char* name) : name_(name) { ::unsetenv(name_); }
  ~EnvVarGuard() { ::unsetenv(name_); }
  void set(const char* value) { ::setenv(name_, value, 1); }

 private:
  const char* name_;
};

std::string scratch_path(const char* tag) {
  return (std::filesystem::temp_directory_path() /
          ("glckpt-harness-" + std::to_string(::getpid()) + "-" + tag + ".oglc"))
      .string();
}

}  // namespace

TEST_CASE("gears is deterministic and counts its calls") {
  Workload w{.kind = WorkloadKind::Gears, .frames = 40, .seed = 6};

  uint64_t first = run_on_fresh_driver(w, 1);
  uint64_t second = run_on_fresh_driver(w, 1);
  CHECK(first == second);

  // Interposition is invisible to pixels: the session run lands on the same
  // hash as the bare driver, even with a different driver seed underneath.
  session::Session s = start_session(33);
  SessionSurface surface(s);
  CHECK(run_workload(w, surface) == first);
  CHECK(s.log().size() == 1 + w.frames * 4);  // one create, then 4 calls per frame

  Workload still{.kind = WorkloadKind::Gears, .frames = 0, .seed = 6};
  minigl::Driver untouched(1);
  uint32_t ctx = untouched.create_context();
  CHECK(run_on_fresh_driver(still, 1) == untouched.framebuffer_hash(ctx));
}

TEST_CASE("gears responds to both frames and seed") {
  uint64_t base = run_on_fresh_driver({.kind = WorkloadKind::Gears, .frames = 40, .seed = 6}, 1);
  CHECK(run_on_fresh_driver({.kind = WorkloadKind::Gears, .frames = 41, .seed = 6}, 1) != base);
  CHECK(run_on_fresh_driver({.kind = WorkloadKind::Gears, .frames = 40, .seed = 7}, 1) != base);
}

TEST_CASE("modelload burns its synthetic load up front") {
  Workload w{.kind = WorkloadKind::ModelLoad, .frames = 10, .seed = 3,
             .synth_ms_per_frame = 2.0};

  uint64_t hash = 0;
  double elapsed = ms_elapsed([&] { hash = run_on_fresh_session(w, 5); });
  CHECK(elapsed >= 19.5);  // 10 frames * 2 ms, busy-waited
  CHECK(run_on_fresh_session(w, 8) == hash);
  CHECK(run_on_fresh_driver(w, 5) == hash);

  // Without a synthetic load the workload is still a perfectly good program;
  // only the restart benchmark insists on one.
  Workload free{.kind = WorkloadKind::ModelLoad, .frames = 10, .seed = 3};
  CHECK(run_on_fresh_session(free, 5) == hash);
}

TEST_CASE("random plans are deterministic over (seed, length)") {
  Workload w{.kind = WorkloadKind::Random, .frames = 400, .seed = 12};
  uint64_t first = run_on_fresh_session(w, 2);
  CHECK(run_on_fresh_session(w, 9) == first);
  CHECK(run_on_fresh_driver(w, 2) == first);
}

TEST_CASE("a split plan finishes identically after checkpoint and restore") {
  RandomPlan plan = plan_random_program(77, 220);
  REQUIRE(plan.calls.size() == 220);

  session::Session ref = start_session(10);
  SessionSurface ref_surface(ref);
  PlanCursor ref_cursor;
  run_plan(plan, ref_surface, ref_cursor, plan.calls.size());
  uint64_t want = combined_plan_hash(ref_surface, ref_cursor);
  CHECK(want == ref.combined_framebuffer_hash());

  session::Session s = start_session(10);
  SessionSurface surface(s);
  PlanCursor cursor;
  run_plan(plan, surface, cursor, 97);

  splitproc::CheckpointImage image = s.checkpoint();
  std::vector<uint8_t> bytes = image.serialize();

  session::Session restored =
      session::Session::restore(splitproc::CheckpointImage::deserialize(bytes), 999);
  SessionSurface restored_surface(restored);
  run_plan(plan, restored_surface, cursor, plan.calls.size());

  CHECK(combined_plan_hash(restored_surface, cursor) == want);
  CHECK(cursor.faults == ref_cursor.faults);
}

TEST_CASE("overhead report arithmetic is exact") {
  Workload w{.kind = WorkloadKind::Gears, .frames = 60, .seed = 1};
  BenchReport report = bench_overhead(w, 3);

  CHECK(report.baseline_ms > 0.0);
  CHECK(report.interposed_ms > 0.0);
  CHECK(report.overhead_ratio ==
        (report.interposed_ms - report.baseline_ms) / report.baseline_ms);
  CHECK(report.fps > 0.0);
  CHECK(report.frames == 60);
  CHECK(report.log_len == 241);

  CHECK(thrown_code([&] { bench_overhead(w, 2); }) == Errc::BadValue);
}

TEST_CASE("restart benchmark demands modelload with a real load") {
  CHECK(thrown_code([] {
          bench_restart({.kind = WorkloadKind::Gears, .frames = 10, .seed = 1,
                         .synth_ms_per_frame = 5.0},
                        true);
        }) == Errc::BadValue);
  CHECK(thrown_code([] {
          bench_restart({.kind = WorkloadKind::ModelLoad, .frames = 10, .seed = 1}, true);
        }) == Errc::BadValue);
}

TEST_CASE("restart beats cold start once there is a load to skip") {
  Workload w{.kind = WorkloadKind::ModelLoad, .frames = 20, .seed = 4,
             .synth_ms_per_frame = 5.0};

  BenchReport pruned = bench_restart(w, true);
  CHECK(pruned.coldstart_ms >= 99.0);  // the 100 ms synthetic parse dominates
  CHECK(pruned.restore_ms < pruned.coldstart_ms);
  CHECK(pruned.pruned_len <= pruned.log_len);
  CHECK(pruned.log_len > 0);

  BenchReport unpruned = bench_restart(w, false);
  CHECK(unpruned.pruned_len == unpruned.log_len);
}

TEST_CASE("the property pack passes on fresh seeds") {
  VerifyOutcome outcome = verify_properties(2026, 40);
  CHECK(outcome.cases == 40);
  CHECK(outcome.failures == 0);
  CHECK(outcome.messages.empty());
  CHECK(outcome.ok());
}

TEST_CASE("cli: run prints a stable report") {
  EnvVarGuard env("GLCKPT_FB_SIZE");
  CliResult first = invoke_cli({"run", "--frames", "25", "--seed", "3"});
  CliResult second = invoke_cli({"run", "--frames", "25", "--seed", "3"});

  CHECK(first.code == 0);
  CHECK(first.out == second.out);
  CHECK(grab(first.out, "workload") == "gears");
  CHECK(grab(first.out, "frames") == "25");
  CHECK(grab(first.out, "seed") == "3");
  CHECK(grab(first.out, "fb_hash").size() == 16);
  CHECK(grab(first.out, "log_len") == "101");

  CHECK(grab(invoke_cli({"run", "--frames", "25", "--seed", "4"}).out, "fb_hash") !=
        grab(first.out, "fb_hash"));
}

TEST_CASE("cli: ckpt then restore round-trips the framebuffer hash") {
  EnvVarGuard env("GLCKPT_FB_SIZE");
  std::string image = scratch_path("roundtrip");

  CliResult saved = invoke_cli({"ckpt", "--workload", "random", "--frames", "150", "--seed", "21",
                         "--image", image, "--prune"});
  REQUIRE(saved.code == 0);
  CHECK(grab(saved.out, "image") == image);
  CHECK(grab(saved.out, "image_bytes") != "");
  CHECK(std::filesystem::exists(image));

  CliResult restored = invoke_cli({"restore", "--image", image, "--driver-seed", "777"});
  CHECK(restored.code == 0);
  CHECK(grab(restored.out, "fb_hash") == grab(saved.out, "fb_hash"));
  CHECK(grab(restored.out, "epoch") == "1");

  std::filesystem::remove(image);
  CliResult gone = invoke_cli({"restore", "--image", image});
  CHECK(gone.code == 1);
  CHECK(gone.err.find("error=bad value") != std::string::npos);
}

TEST_CASE("cli: usage errors exit 2, help exits 0") {
  CHECK(invoke_cli({"--bogus"}).code == 2);
  CHECK(invoke_cli({"run", "--badflag"}).code == 2);
  CHECK(invoke_cli({"restore"}).code == 2);  // --image is required
  CHECK(invoke_cli({"bench"}).code == 2);    // needs overhead or restart
  CHECK(invoke_cli({}).code == 2);
  CHECK(invoke_cli({"run", "--badflag"}).err.find("--badflag") != std::string::npos);

  CliResult help = invoke_cli({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("Subcommands") != std::string::npos);
}

TEST_CASE("cli: the framebuffer size env var is honored and validated") {
  EnvVarGuard env("GLCKPT_FB_SIZE");
  std::string base = grab(invoke_cli({"run", "--frames", "12", "--seed", "2"}).out, "fb_hash");

  env.set("32x32");
  CliResult small = invoke_cli({"run", "--frames", "12", "--seed", "2"});
  CHECK(small.code == 0);
  CHECK(grab(small.out, "fb_hash") != base);

  for (const char* bad : {"bogus", "64", "x64", "64x", "0x32", "32x0", "64x5000", "-1x64"}) {
    env.set(bad);
    CliResult r = invoke_cli({"run", "--frames", "1"});
    CHECK(r.code == 2);
    CHECK(r.err.find("GLCKPT_FB_SIZE") != std::string::npos);
  }
}

TEST_CASE("cli: verify and bench restart report their verdicts") {
  EnvVarGuard env("GLCKPT_FB_SIZE");
  CliResult verify = invoke_cli({"verify", "--seed", "5", "--cases", "10"});
  CHECK(verify.code == 0);
  CHECK(grab(verify.out, "cases") == "10");
  CHECK(grab(verify.out, "failures") == "0");
  CHECK(grab(verify.out, "verify") == "pass");

  CliResult restart = invoke_cli({"bench", "restart", "--frames", "20", "--seed", "2",
                           "--synth-ms-per-frame", "5", "--prune"});
  CHECK(restart.code == 0);
  CHECK(grab(restart.out, "restart_advantage") == "1");
  CHECK(grab(restart.out, "workload") == "modelload");

  CliResult overhead = invoke_cli({"bench", "overhead", "--frames", "50", "--seed", "2"});
  CHECK(overhead.code == 0);
  CHECK(grab(overhead.out, "log_len") == "201");
  CHECK(grab(overhead.out, "overhead_ratio") != "");
}
