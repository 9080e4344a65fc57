#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "glckpt/minigl.hpp"
#include "glckpt/session.hpp"

// Deterministic call generators that drive the stack the way applications do.
// Every workload is a pure function of (kind, frames, seed), so two runs on
// any two targets must end with identical pixels; that determinism is what
// equivalence checks and benchmarks lean on.

namespace glckpt::harness {

enum class WorkloadKind : uint8_t { Gears, ModelLoad, Random };

const char* workload_name(WorkloadKind kind);
std::optional<WorkloadKind> parse_workload(std::string_view name);

struct Workload {
  WorkloadKind kind = WorkloadKind::Gears;
  uint64_t frames = 100;
  uint64_t seed = 0;
  // ModelLoad only: synthetic "parse the model" cost, burned once up front as
  // frames * this many milliseconds of pure computation.
  double synth_ms_per_frame = 0.0;
};

// The call surface a workload draws against. A session target exercises the
// whole interposition stack; a bare driver is the baseline the benchmark
// compares it to. Same calls, same pixels, different plumbing.
class GlSurface {
 public:
  virtual ~GlSurface() = default;

  virtual uint32_t create_context() = 0;
  virtual uint32_t gen_resource(uint32_t ctx, minigl::ResourceKind kind) = 0;
  virtual void delete_resource(uint32_t ctx, minigl::ResourceKind kind, uint32_t id) = 0;
  virtual void upload_data(uint32_t ctx, minigl::ResourceKind kind, uint32_t id,
                           std::vector<uint8_t> bytes) = 0;
  virtual void set_state(uint32_t ctx, minigl::StateKey key, const minigl::StateValue& value) = 0;
  virtual void bind(uint32_t ctx, minigl::ResourceKind kind, uint32_t id) = 0;
  virtual void clear(uint32_t ctx) = 0;
  virtual void draw_triangle(uint32_t ctx, minigl::Vec2i v0, minigl::Vec2i v1, minigl::Vec2i v2,
                             minigl::Color4b color) = 0;
  virtual std::vector<uint8_t> read_framebuffer(uint32_t ctx) = 0;
  virtual uint64_t framebuffer_hash(uint32_t ctx) = 0;
  virtual minigl::FbSize fb_size() const = 0;
};

class SessionSurface : public GlSurface {
 public:
  explicit SessionSurface(session::Session& s) : s_(s) {}

  uint32_t create_context() override { return s_.create_context(); }
  uint32_t gen_resource(uint32_t ctx, minigl::ResourceKind kind) override {
    return s_.gen_resource(ctx, kind);
  }
  void delete_resource(uint32_t ctx, minigl::ResourceKind kind, uint32_t id) override {
    s_.delete_resource(ctx, kind, id);
  }
  void upload_data(uint32_t ctx, minigl::ResourceKind kind, uint32_t id,
                   std::vector<uint8_t> bytes) override {
    s_.upload_data(ctx, kind, id, std::move(bytes));
  }
  void set_state(uint32_t ctx, minigl::StateKey key, const minigl::StateValue& value) override {
    s_.set_state(ctx, key, value);
  }
  void bind(uint32_t ctx, minigl::ResourceKind kind, uint32_t id) override {
    s_.bind(ctx, kind, id);
  }
  void clear(uint32_t ctx) override { s_.clear(ctx); }
  void draw_triangle(uint32_t ctx, minigl::Vec2i v0, minigl::Vec2i v1, minigl::Vec2i v2,
                     minigl::Color4b color) override {
    s_.draw_triangle(ctx, v0, v1, v2, color);
  }
  std::vector<uint8_t> read_framebuffer(uint32_t ctx) override { return s_.read_framebuffer(ctx); }
  uint64_t framebuffer_hash(uint32_t ctx) override { return s_.framebuffer_hash(ctx); }
  minigl::FbSize fb_size() const override { return s_.config().fb_size; }

 private:
  session::Session& s_;
};

class DriverSurface : public GlSurface {
 public:
  explicit DriverSurface(minigl::Driver& d) : d_(d) {}

  uint32_t create_context() override { return d_.create_context(); }
  uint32_t gen_resource(uint32_t ctx, minigl::ResourceKind kind) override {
    return d_.gen_resource(ctx, kind);
  }
  void delete_resource(uint32_t ctx, minigl::ResourceKind kind, uint32_t id) override {
    d_.delete_resource(ctx, kind, id);
  }
  void upload_data(uint32_t ctx, minigl::ResourceKind kind, uint32_t id,
                   std::vector<uint8_t> bytes) override {
    d_.upload_data(ctx, kind, id, std::move(bytes));
  }
  void set_state(uint32_t ctx, minigl::StateKey key, const minigl::StateValue& value) override {
    d_.set_state(ctx, key, value);
  }
  void bind(uint32_t ctx, minigl::ResourceKind kind, uint32_t id) override {
    d_.bind(ctx, kind, id);
  }
  void clear(uint32_t ctx) override { d_.clear(ctx); }
  void draw_triangle(uint32_t ctx, minigl::Vec2i v0, minigl::Vec2i v1, minigl::Vec2i v2,
                     minigl::Color4b color) override {
    d_.draw_triangle(ctx, v0, v1, v2, color);
  }
  std::vector<uint8_t> read_framebuffer(uint32_t ctx) override { return d_.read_framebuffer(ctx); }
  uint64_t framebuffer_hash(uint32_t ctx) override { return d_.framebuffer_hash(ctx); }
  minigl::FbSize fb_size() const override { return d_.fb_size(); }

 private:
  minigl::Driver& d_;
};

// Runs the whole workload and returns the final framebuffer hash of its
// context (for Random, the combined hash over all contexts it created).
uint64_t run_workload(const Workload& w, GlSurface& gl);

// Random programs are generated as a plan over abstract handles, then bound
// to concrete ids while running. The indirection is what lets one program be
// split at an arbitrary call index, run up to it, survive a checkpoint and
// restore, and then finish: the cursor's id bindings stay valid because the
// ids it holds are the session's stable virtual ids.
enum class PlanOp : uint8_t {
  CreateContext,
  Gen,
  Delete,
  Upload,
  SetState,
  Bind,
  Clear,
  Draw,
};

struct PlannedCall {
  PlanOp op{};
  uint32_t ctx_handle = 0;  // index into the plan's context creation order
  minigl::ResourceKind kind{};
  uint32_t res_handle = 0;  // 1-based index into the kind's creation order; 0 = the null id
  // True when the call deliberately references a deleted handle, so the
  // target must reject it; the rejection itself is part of the program.
  bool expect_fault = false;
  minigl::StateKey key{};
  minigl::StateValue value;
  std::vector<uint8_t> payload;
  minigl::Vec2i v0, v1, v2;
  minigl::Color4b color;
};

struct RandomPlan {
  std::vector<PlannedCall> calls;
  size_t context_count = 0;
  std::array<size_t, minigl::kKindCount> creations_per_kind{};
};

RandomPlan plan_random_program(uint64_t seed, size_t call_count);

// Where a partially-run plan stands: which call comes next and what id each
// handle is bound to. Survives checkpoint/restore untouched.
struct PlanCursor {
  size_t next_call = 0;
  uint64_t faults = 0;
  std::vector<uint32_t> contexts;
  std::array<std::vector<uint32_t>, minigl::kKindCount> resources;
};

// Executes plan calls [cursor.next_call, end_call) against the target.
// Expected faults are counted, not propagated.
void run_plan(const RandomPlan& plan, GlSurface& gl, PlanCursor& cursor, size_t end_call);

// fnv chain over every planned context's framebuffer, in creation order. For
// a session target this matches Session::combined_framebuffer_hash.
uint64_t combined_plan_hash(GlSurface& gl, const PlanCursor& cursor);

}  // namespace glckpt::harness
