#include "glckpt/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string_view>

#include "CLI11.hpp"
#include "glckpt/bench.hpp"
#include "glckpt/session.hpp"
#include "glckpt/splitproc.hpp"
#include "glckpt/verify.hpp"
#include "glckpt/workload.hpp"

namespace glckpt::cli {

namespace {

using harness::BenchReport;
using harness::SessionSurface;
using harness::Workload;

std::string hex16(uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::string fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  return buf;
}

void write_file(const std::string& path, const std::vector<uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::BadValue, "cannot write " + path);
}

std::vector<uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw Error(Errc::BadValue, "cannot read " + path);
  std::vector<uint8_t> bytes(static_cast<size_t>(in.tellg()));
  in.seekg(0);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  return bytes;
}

bool parse_dimension(std::string_view text, int32_t& dim) {
  int32_t value = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size()) return false;
  dim = value;
  return value >= 1 && value <= 4096;
}

// GLCKPT_FB_SIZE=WxH, each side in [1, 4096]. Absent means the default size.
bool framebuffer_size_from_env(minigl::FbSize& fb, std::string& problem) {
  const char* text = std::getenv("GLCKPT_FB_SIZE");
  if (text == nullptr) return true;
  std::string_view view(text);
  size_t split = view.find('x');
  if (split == std::string_view::npos || split == 0 || split + 1 >= view.size() ||
      !parse_dimension(view.substr(0, split), fb.w) ||
      !parse_dimension(view.substr(split + 1), fb.h)) {
    problem = "GLCKPT_FB_SIZE must be WxH with each side in 1..4096, got \"" +
              std::string(view) + "\"";
    return false;
  }
  return true;
}

void print_workload(std::ostream& out, const Workload& w) {
  out << "workload=" << harness::workload_name(w.kind) << "\n";
  out << "frames=" << w.frames << "\n";
  out << "seed=" << w.seed << "\n";
}

// `run` and `ckpt` share a body: run the workload in a session and, when an
// image path is given, checkpoint into it. The hash is printed before the
// checkpoint freezes the session, so a later `restore` should print the same
// value: that pair of lines is the round-trip check.
int do_run(const Workload& w, const std::string& image_path, bool prune, minigl::FbSize fb,
           std::ostream& out) {
  session::Session s = session::Session::start({.driver_seed = w.seed, .fb_size = fb});
  SessionSurface surface(s);
  harness::run_workload(w, surface);
  print_workload(out, w);
  out << "fb_hash=" << hex16(s.combined_framebuffer_hash()) << "\n";
  out << "log_len=" << s.log().size() << "\n";
  if (!image_path.empty()) {
    splitproc::CheckpointImage image = s.checkpoint(prune);
    std::vector<uint8_t> bytes = image.serialize();
    write_file(image_path, bytes);
    out << "pruned_len=" << image.log.size() << "\n";
    out << "image_bytes=" << bytes.size() << "\n";
    out << "image=" << image_path << "\n";
  }
  return 0;
}

int do_restore(const std::string& image_path, uint64_t driver_seed, minigl::FbSize fb,
               std::ostream& out) {
  splitproc::CheckpointImage image = splitproc::CheckpointImage::deserialize(read_file(image_path));
  session::Session s = session::Session::restore(image, driver_seed, ":0", fb);
  out << "fb_hash=" << hex16(s.combined_framebuffer_hash()) << "\n";
  out << "epoch=" << s.epoch() << "\n";
  out << "log_len=" << s.log().size() << "\n";
  out << "windows=" << s.display().window_count() << "\n";
  return 0;
}

int do_bench_overhead(const Workload& w, int repeats, std::ostream& out) {
  BenchReport report = harness::bench_overhead(w, repeats);
  print_workload(out, w);
  out << "repeat=" << repeats << "\n";
  out << "baseline_ms=" << fixed(report.baseline_ms, 3) << "\n";
  out << "interposed_ms=" << fixed(report.interposed_ms, 3) << "\n";
  out << "overhead_ratio=" << fixed(report.overhead_ratio, 4) << "\n";
  out << "fps=" << fixed(report.fps, 1) << "\n";
  out << "log_len=" << report.log_len << "\n";
  return 0;
}

int do_bench_restart(const Workload& w, bool prune, std::ostream& out) {
  BenchReport report = harness::bench_restart(w, prune);
  print_workload(out, w);
  out << "synth_ms=" << fixed(w.synth_ms_per_frame * static_cast<double>(w.frames), 1) << "\n";
  out << "coldstart_ms=" << fixed(report.coldstart_ms, 3) << "\n";
  out << "ckpt_ms=" << fixed(report.ckpt_ms, 3) << "\n";
  out << "restore_ms=" << fixed(report.restore_ms, 3) << "\n";
  out << "log_len=" << report.log_len << "\n";
  out << "pruned_len=" << report.pruned_len << "\n";
  bool advantage = report.restore_ms < report.coldstart_ms;
  out << "restart_advantage=" << (advantage ? 1 : 0) << "\n";
  return advantage ? 0 : 1;
}

int do_verify(uint64_t seed, uint64_t cases, std::ostream& out) {
  harness::VerifyOutcome outcome = harness::verify_properties(seed, cases);
  out << "seed=" << seed << "\n";
  out << "cases=" << outcome.cases << "\n";
  out << "failures=" << outcome.failures << "\n";
  for (const std::string& message : outcome.messages) out << "failure=" << message << "\n";
  out << "verify=" << (outcome.ok() ? "pass" : "fail") << "\n";
  return outcome.ok() ? 0 : 1;
}

}  // namespace

int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"checkpoint/restore engine for the miniature GL stack"};
  app.name("glckpt");
  app.require_subcommand(1);

  std::string workload_flag = "gears";
  Workload w;
  std::string image_path;
  bool prune = false;
  uint64_t driver_seed = 1;
  int repeats = 3;
  uint64_t verify_seed = 1;
  uint64_t verify_cases = 100;

  auto add_workload_flags = [&](CLI::App* cmd, bool with_synth) {
    cmd->add_option("--workload", workload_flag, "gears, modelload, or random")
        ->check(CLI::IsMember({"gears", "modelload", "random"}));
    cmd->add_option("--frames", w.frames, "workload length");
    cmd->add_option("--seed", w.seed, "workload and driver seed");
    if (with_synth) {
      cmd->add_option("--synth-ms-per-frame", w.synth_ms_per_frame,
                      "modelload synthetic parse cost per frame, in ms");
    }
  };

  CLI::App* run_cmd = app.add_subcommand("run", "run a workload and print its framebuffer hash");
  add_workload_flags(run_cmd, true);
  run_cmd->add_option("--image", image_path, "also checkpoint into this file");
  run_cmd->add_flag("--prune", prune, "prune the log before imaging");

  CLI::App* ckpt_cmd =
      app.add_subcommand("ckpt", "run a workload and checkpoint it into an image file");
  add_workload_flags(ckpt_cmd, true);
  ckpt_cmd->add_option("--image", image_path, "image file to write")->required();
  ckpt_cmd->add_flag("--prune", prune, "prune the log before imaging");

  CLI::App* restore_cmd = app.add_subcommand("restore", "restore a session from an image file");
  restore_cmd->add_option("--image", image_path, "image file to read")->required();
  restore_cmd->add_option("--driver-seed", driver_seed, "seed for the relaunched driver");

  CLI::App* bench_cmd = app.add_subcommand("bench", "timing experiments");
  bench_cmd->require_subcommand(1);
  CLI::App* overhead_cmd =
      bench_cmd->add_subcommand("overhead", "interposed vs bare-driver runtime");
  add_workload_flags(overhead_cmd, false);
  overhead_cmd->add_option("--repeat", repeats, "measured repetitions per side, at least 3");
  CLI::App* restart_cmd =
      bench_cmd->add_subcommand("restart", "restore-from-image vs cold-start time");
  restart_cmd->add_option("--frames", w.frames, "workload length");
  restart_cmd->add_option("--seed", w.seed, "workload and driver seed");
  restart_cmd->add_option("--synth-ms-per-frame", w.synth_ms_per_frame,
                          "synthetic parse cost per frame, in ms")
      ->default_val(5.0);
  restart_cmd->add_flag("--prune", prune, "prune the log before imaging");

  CLI::App* verify_cmd = app.add_subcommand("verify", "run the end-to-end property pack");
  verify_cmd->add_option("--seed", verify_seed, "base seed for the cases");
  verify_cmd->add_option("--cases", verify_cases, "number of random cases");

  try {
    // CLI11 consumes lexed arguments from the back.
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error: " << e.what() << "\n";
    return 2;
  }

  minigl::FbSize fb;
  std::string env_problem;
  if (!framebuffer_size_from_env(fb, env_problem)) {
    err << "error: " << env_problem << "\n";
    return 2;
  }

  if (auto kind = harness::parse_workload(workload_flag)) w.kind = *kind;
  if (restart_cmd->parsed()) w.kind = harness::WorkloadKind::ModelLoad;

  try {
    if (run_cmd->parsed()) return do_run(w, image_path, prune, fb, out);
    if (ckpt_cmd->parsed()) return do_run(w, image_path, prune, fb, out);
    if (restore_cmd->parsed()) return do_restore(image_path, driver_seed, fb, out);
    if (overhead_cmd->parsed()) return do_bench_overhead(w, repeats, out);
    if (restart_cmd->parsed()) return do_bench_restart(w, prune, out);
    if (verify_cmd->parsed()) return do_verify(verify_seed, verify_cases, out);
  } catch (const Error& e) {
    err << "error=" << e.what() << "\n";  // what() leads with the errc name
    return 1;
  }
  err << "error: no command\n";
  return 2;
}

int run_cli(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(std::move(args), std::cout, std::cerr);
}

}  // namespace glckpt::cli
