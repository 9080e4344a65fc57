#include "glckpt/workload.hpp"

#include <algorithm>
#include <chrono>
#include <random>

namespace glckpt::harness {

using minigl::ResourceKind;
using minigl::StateKey;

const char* workload_name(WorkloadKind kind) {
  switch (kind) {
    case WorkloadKind::Gears:
      return "gears";
    case WorkloadKind::ModelLoad:
      return "modelload";
    case WorkloadKind::Random:
      return "random";
  }
  return "?";
}

std::optional<WorkloadKind> parse_workload(std::string_view name) {
  if (name == "gears") return WorkloadKind::Gears;
  if (name == "modelload") return WorkloadKind::ModelLoad;
  if (name == "random") return WorkloadKind::Random;
  return std::nullopt;
}

namespace {

// sin(2*pi*i/16) scaled by 100. Integer angles keep the whole vertex path
// exact, so a frame renders bit-identically everywhere.
constexpr std::array<int32_t, 16> kSin16 = {0,  38,  71,  92,  100,  92,  71,  38,
                                            0, -38, -71, -92, -100, -92, -71, -38};

minigl::Vec2i rim_point(minigl::FbSize fb, uint32_t angle, int32_t radius_pct) {
  int32_t r = std::min(fb.w, fb.h) / 2 * radius_pct / 100;
  return {fb.w / 2 + kSin16[(angle + 4) % 16] * r / 100, fb.h / 2 + kSin16[angle % 16] * r / 100};
}

// One frame = tint the background, wipe it, draw the two spinning blades.
// Exactly 4 logged calls per frame on top of the initial context creation.
uint64_t run_gears(const Workload& w, GlSurface& gl) {
  minigl::FbSize fb = gl.fb_size();
  uint32_t ctx = gl.create_context();
  uint32_t phase = static_cast<uint32_t>(w.seed % 16);
  for (uint64_t f = 0; f < w.frames; ++f) {
    uint32_t a = static_cast<uint32_t>((f + phase) % 16);
    gl.set_state(ctx, StateKey::ClearColor,
                 minigl::ClearColor{0.04f * static_cast<float>(a % 8), 0.1f, 0.25f, 1.0f});
    gl.clear(ctx);
    gl.draw_triangle(ctx, rim_point(fb, a, 94), rim_point(fb, a + 5, 94),
                     rim_point(fb, a + 11, 94),
                     {static_cast<uint8_t>(40 + 12 * (a % 8)), 160, 80, 255});
    gl.draw_triangle(ctx, rim_point(fb, a + 8, 56), rim_point(fb, a + 13, 56),
                     rim_point(fb, a + 3, 56),
                     {220, static_cast<uint8_t>(30 + 10 * (a % 8)), 60, 255});
  }
  return gl.framebuffer_hash(ctx);
}

// Pure computation standing in for parsing a model off disk. Busy-waits so
// the cost is wall-clock real but deterministic in effect (none).
void burn_synthetic_load(double total_ms) {
  if (total_ms <= 0) return;
  auto deadline = std::chrono::steady_clock::now() +
                  std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                      std::chrono::duration<double, std::milli>(total_ms));
  volatile uint64_t sink = 0;
  while (std::chrono::steady_clock::now() < deadline) {
    for (int i = 0; i < 64; ++i) sink = sink * 6364136223846793005ull + 1442695040888963407ull;
  }
}

// Burns the synthetic parse cost, then loads "the model": a stream of mesh
// buffers each uploaded twice (parsed, then optimized), staging textures that
// die immediately, and a progress tint per unit. The upload count is capped
// so frames can scale the synthetic cost without bloating the log.
uint64_t run_modelload(const Workload& w, GlSurface& gl) {
  burn_synthetic_load(w.synth_ms_per_frame * static_cast<double>(w.frames));

  minigl::FbSize fb = gl.fb_size();
  uint32_t ctx = gl.create_context();
  std::mt19937_64 rng(w.seed * 0x9e3779b97f4a7c15ull + 0x6d);
  size_t units = static_cast<size_t>(std::min<uint64_t>(w.frames, 256));
  uint32_t last_mesh = 0;
  for (size_t i = 0; i < units; ++i) {
    uint32_t mesh = gl.gen_resource(ctx, ResourceKind::Buffer);
    std::vector<uint8_t> raw(16 + rng() % 48);
    for (auto& b : raw) b = static_cast<uint8_t>(rng());
    gl.upload_data(ctx, ResourceKind::Buffer, mesh, raw);
    for (auto& b : raw) b ^= 0x5a;
    gl.upload_data(ctx, ResourceKind::Buffer, mesh, std::move(raw));
    if (i % 4 == 3) {
      uint32_t staging = gl.gen_resource(ctx, ResourceKind::Texture);
      gl.upload_data(ctx, ResourceKind::Texture, staging, {static_cast<uint8_t>(i)});
      gl.delete_resource(ctx, ResourceKind::Texture, staging);
    }
    gl.set_state(ctx, StateKey::ClearColor,
                 minigl::ClearColor{0.0f, static_cast<float>(i + 1) / static_cast<float>(units),
                                    0.0f, 1.0f});
    last_mesh = mesh;
  }
  if (last_mesh != 0) gl.bind(ctx, ResourceKind::Buffer, last_mesh);
  gl.set_state(ctx, StateKey::Viewport, minigl::ViewportRect{0, 0, fb.w, fb.h});
  gl.clear(ctx);
  gl.draw_triangle(ctx, {fb.w / 8, fb.h / 8}, {fb.w - fb.w / 8, fb.h / 4},
                   {fb.w / 2, fb.h - fb.h / 8}, {190, 170, 40, 255});
  return gl.framebuffer_hash(ctx);
}

ResourceKind nth_kind(uint64_t n) {
  return static_cast<ResourceKind>(1 + n % minigl::kKindCount);
}

}  // namespace

RandomPlan plan_random_program(uint64_t seed, size_t call_count) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  RandomPlan plan;
  plan.calls.reserve(call_count);

  // The generator mirrors the liveness the program will have at run time, so
  // it can aim most references at live handles and a deliberate few at dead
  // ones. Handle numbering is creation order, the same order the cursor binds
  // ids in.
  struct SimKind {
    std::vector<bool> alive;
    std::vector<uint32_t> live_handles() const {
      std::vector<uint32_t> out;
      for (uint32_t h = 0; h < alive.size(); ++h) {
        if (alive[h]) out.push_back(h + 1);
      }
      return out;
    }
    std::vector<uint32_t> dead_handles() const {
      std::vector<uint32_t> out;
      for (uint32_t h = 0; h < alive.size(); ++h) {
        if (!alive[h]) out.push_back(h + 1);
      }
      return out;
    }
  };
  std::array<SimKind, minigl::kKindCount> sim;

  auto random_color = [&] {
    return minigl::ClearColor{static_cast<float>(rng() % 256) / 255.0f,
                              static_cast<float>(rng() % 256) / 255.0f,
                              static_cast<float>(rng() % 256) / 255.0f, 1.0f};
  };

  for (size_t i = 0; i < call_count; ++i) {
    PlannedCall call;
    if (plan.context_count == 0) {
      call.op = PlanOp::CreateContext;
      plan.context_count = 1;
      plan.calls.push_back(std::move(call));
      continue;
    }
    call.ctx_handle = static_cast<uint32_t>(rng() % plan.context_count);

    uint64_t roll = rng() % 100;
    if (roll < 2 && plan.context_count < 4) {
      call.op = PlanOp::CreateContext;
      ++plan.context_count;
    } else if (roll < 22) {
      call.op = PlanOp::Gen;
      call.kind = nth_kind(rng());
      SimKind& s = sim[minigl::kind_index(call.kind)];
      s.alive.push_back(true);
      call.res_handle = static_cast<uint32_t>(s.alive.size());
      ++plan.creations_per_kind[minigl::kind_index(call.kind)];
    } else if (roll < 29) {
      call.op = PlanOp::Delete;
      call.kind = nth_kind(rng());
      SimKind& s = sim[minigl::kind_index(call.kind)];
      std::vector<uint32_t> live = s.live_handles();
      std::vector<uint32_t> dead = s.dead_handles();
      if (!dead.empty() && rng() % 100 < 15) {
        call.res_handle = dead[rng() % dead.size()];
        call.expect_fault = true;
      } else if (!live.empty()) {
        call.res_handle = live[rng() % live.size()];
        s.alive[call.res_handle - 1] = false;
      } else {
        call.op = PlanOp::Clear;
      }
    } else if (roll < 47) {
      call.op = PlanOp::Upload;
      call.kind = nth_kind(rng());
      SimKind& s = sim[minigl::kind_index(call.kind)];
      std::vector<uint32_t> live = s.live_handles();
      std::vector<uint32_t> dead = s.dead_handles();
      if (!dead.empty() && rng() % 100 < 3) {
        call.res_handle = dead[rng() % dead.size()];
        call.expect_fault = true;
      } else if (!live.empty()) {
        call.res_handle = live[rng() % live.size()];
      } else {
        call.op = PlanOp::Clear;
      }
      if (call.op == PlanOp::Upload) {
        call.payload.resize(1 + rng() % 32);
        for (auto& b : call.payload) b = static_cast<uint8_t>(rng());
      }
    } else if (roll < 62) {
      call.op = PlanOp::SetState;
      if (rng() % 2 == 0) {
        call.key = StateKey::ClearColor;
        call.value = random_color();
      } else {
        call.key = StateKey::Viewport;
        call.value = minigl::ViewportRect{static_cast<int32_t>(rng() % 80) - 16,
                                          static_cast<int32_t>(rng() % 80) - 16,
                                          static_cast<int32_t>(rng() % 96),
                                          static_cast<int32_t>(rng() % 96)};
      }
    } else if (roll < 70) {
      call.op = PlanOp::Bind;
      call.kind = nth_kind(rng());
      SimKind& s = sim[minigl::kind_index(call.kind)];
      std::vector<uint32_t> live = s.live_handles();
      std::vector<uint32_t> dead = s.dead_handles();
      if (rng() % 100 < 10) {
        call.res_handle = 0;  // unbind
      } else if (!dead.empty() && rng() % 100 < 3) {
        call.res_handle = dead[rng() % dead.size()];
        call.expect_fault = true;
      } else if (!live.empty()) {
        call.res_handle = live[rng() % live.size()];
      } else {
        call.res_handle = 0;
      }
    } else if (roll < 81) {
      call.op = PlanOp::Clear;
    } else {
      call.op = PlanOp::Draw;
      auto coord = [&] { return static_cast<int32_t>(rng() % 80) - 8; };
      call.v0 = {coord(), coord()};
      call.v1 = {coord(), coord()};
      call.v2 = {coord(), coord()};
      call.color = {static_cast<uint8_t>(rng()), static_cast<uint8_t>(rng()),
                    static_cast<uint8_t>(rng()), 255};
    }
    plan.calls.push_back(std::move(call));
  }
  return plan;
}

void run_plan(const RandomPlan& plan, GlSurface& gl, PlanCursor& cursor, size_t end_call) {
  end_call = std::min(end_call, plan.calls.size());
  for (; cursor.next_call < end_call; ++cursor.next_call) {
    const PlannedCall& call = plan.calls[cursor.next_call];
    // Handle -> bound id. Dead handles keep their last id, which is exactly
    // what a buggy application would pass; the target must reject it.
    auto res_id = [&] {
      return call.res_handle == 0
                 ? 0
                 : cursor.resources[minigl::kind_index(call.kind)][call.res_handle - 1];
    };
    try {
      switch (call.op) {
        case PlanOp::CreateContext:
          cursor.contexts.push_back(gl.create_context());
          break;
        case PlanOp::Gen:
          cursor.resources[minigl::kind_index(call.kind)].push_back(
              gl.gen_resource(cursor.contexts[call.ctx_handle], call.kind));
          break;
        case PlanOp::Delete:
          gl.delete_resource(cursor.contexts[call.ctx_handle], call.kind, res_id());
          break;
        case PlanOp::Upload:
          gl.upload_data(cursor.contexts[call.ctx_handle], call.kind, res_id(), call.payload);
          break;
        case PlanOp::SetState:
          gl.set_state(cursor.contexts[call.ctx_handle], call.key, call.value);
          break;
        case PlanOp::Bind:
          gl.bind(cursor.contexts[call.ctx_handle], call.kind, res_id());
          break;
        case PlanOp::Clear:
          gl.clear(cursor.contexts[call.ctx_handle]);
          break;
        case PlanOp::Draw:
          gl.draw_triangle(cursor.contexts[call.ctx_handle], call.v0, call.v1, call.v2,
                           call.color);
          break;
      }
    } catch (const Error&) {
      ++cursor.faults;
    }
  }
}

uint64_t combined_plan_hash(GlSurface& gl, const PlanCursor& cursor) {
  uint64_t hash = kFnvOffsetBasis;
  for (uint32_t ctx : cursor.contexts) {
    const std::vector<uint8_t> fb = gl.read_framebuffer(ctx);
    hash = fnv1a64(fb.data(), fb.size(), hash);
  }
  return hash;
}

uint64_t run_workload(const Workload& w, GlSurface& gl) {
  switch (w.kind) {
    case WorkloadKind::Gears:
      return run_gears(w, gl);
    case WorkloadKind::ModelLoad:
      return run_modelload(w, gl);
    case WorkloadKind::Random: {
      RandomPlan plan = plan_random_program(w.seed, w.frames);
      PlanCursor cursor;
      run_plan(plan, gl, cursor, plan.calls.size());
      return combined_plan_hash(gl, cursor);
    }
  }
  throw Error(Errc::BadValue, "unknown workload kind");
}

}  // namespace glckpt::harness
