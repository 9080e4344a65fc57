#include "glckpt/minigl.hpp"

#include <algorithm>
#include <string>
#include <utility>

namespace glckpt::minigl {

const char* kind_name(ResourceKind k) {
  switch (k) {
    case ResourceKind::Shader: return "shader";
    case ResourceKind::Program: return "program";
    case ResourceKind::Buffer: return "buffer";
    case ResourceKind::Texture: return "texture";
  }
  return "?";
}

namespace {

void require_kind(ResourceKind kind) {
  if (!kind_valid(static_cast<uint8_t>(kind))) {
    throw Error(Errc::UnknownKind,
                "resource kind " + std::to_string(static_cast<unsigned>(kind)));
  }
}

using int128 = __int128;

// 2D cross product, wide enough for products of arbitrary int32 differences.
int128 cross(int64_t ax, int64_t ay, int64_t bx, int64_t by) {
  return static_cast<int128>(ax) * by - static_cast<int128>(ay) * bx;
}

struct Edge {
  int128 w_row = 0;  // edge function at the first sample of the current row
  int128 step_x = 0;
  int128 step_y = 0;
};

// Edge function w(p) = (b - a) x (p - a); for a positively oriented triangle the
// interior is w > 0 on all three edges. The top-left fill rule decides boundary
// ownership: in y-down raster space an edge keeps its w == 0 pixels only when it
// is a top edge (horizontal, pointing right) or a left edge (pointing up). The
// ownership bias is folded into w_row so the inner loop tests a plain >= 0.
Edge make_edge(Vec2i a, Vec2i b, int64_t sx, int64_t sy) {
  int64_t dx = static_cast<int64_t>(b.x) - a.x;
  int64_t dy = static_cast<int64_t>(b.y) - a.y;
  Edge e;
  e.w_row = cross(dx, dy, sx - a.x, sy - a.y);
  e.step_x = -dy;
  e.step_y = dx;
  bool owns_boundary = dy < 0 || (dy == 0 && dx > 0);
  if (!owns_boundary) e.w_row -= 1;
  return e;
}

}  // namespace

Driver::Driver(uint64_t seed, FbSize fb) : seed_(seed), fb_(fb) {
  if (fb.w <= 0 || fb.h <= 0) {
    throw Error(Errc::BadValue, "framebuffer dimensions must be positive");
  }
}

ContextState& Driver::live_context(uint32_t ctx) {
  auto it = contexts_.find(ctx);
  if (it == contexts_.end()) {
    throw Error(Errc::UnknownContext, "context " + std::to_string(ctx));
  }
  return it->second;
}

const ContextState& Driver::live_context(uint32_t ctx) const {
  auto it = contexts_.find(ctx);
  if (it == contexts_.end()) {
    throw Error(Errc::UnknownContext, "context " + std::to_string(ctx));
  }
  return it->second;
}

Resource& Driver::live_resource(ContextState& cs, ResourceKind kind, uint32_t id) {
  auto& table = cs.resources[kind_index(kind)];
  auto it = table.find(id);
  if (it == table.end()) {
    throw Error(Errc::UnknownId, std::string(kind_name(kind)) + " " + std::to_string(id));
  }
  return it->second;
}

uint32_t Driver::create_context() {
  uint32_t id = next_context_serial_++;
  ContextState cs;
  cs.viewport = {0, 0, fb_.w, fb_.h};
  cs.fb.w = fb_.w;
  cs.fb.h = fb_.h;
  cs.fb.pixels.assign(static_cast<size_t>(fb_.w) * fb_.h * 4, 0);
  contexts_.emplace(id, std::move(cs));
  return id;
}

uint32_t Driver::gen_resource(uint32_t ctx, ResourceKind kind) {
  require_kind(kind);
  ContextState& cs = live_context(ctx);
  size_t ki = kind_index(kind);
  for (;;) {
    uint32_t id = allocator_id(seed_, alloc_counter_++);
    // Collision-skip is driver-wide per kind, not per context: id-translation
    // tables upstream key real ids per kind, so a repeat across two contexts
    // would break them.
    bool live_anywhere = false;
    for (const auto& [cid, other] : contexts_) {
      if (other.resources[ki].count(id)) {
        live_anywhere = true;
        break;
      }
    }
    if (live_anywhere) continue;  // burn the counter value, try the next
    cs.resources[ki].emplace(id, Resource{kind, id, {}});
    return id;
  }
}

void Driver::delete_resource(uint32_t ctx, ResourceKind kind, uint32_t id) {
  require_kind(kind);
  ContextState& cs = live_context(ctx);
  auto& table = cs.resources[kind_index(kind)];
  auto it = table.find(id);
  if (it == table.end()) {
    throw Error(Errc::UnknownId, std::string(kind_name(kind)) + " " + std::to_string(id));
  }
  table.erase(it);
  if (cs.bound[kind_index(kind)] == id) cs.bound[kind_index(kind)] = 0;
}

void Driver::upload_data(uint32_t ctx, ResourceKind kind, uint32_t id,
                         std::vector<uint8_t> bytes) {
  require_kind(kind);
  live_resource(live_context(ctx), kind, id).payload = std::move(bytes);
}

void Driver::set_state(uint32_t ctx, StateKey key, const StateValue& value) {
  ContextState& cs = live_context(ctx);
  switch (key) {
    case StateKey::ClearColor: {
      const ClearColor* c = std::get_if<ClearColor>(&value);
      if (!c) throw Error(Errc::BadValue, "clear_color takes a color");
      for (float ch : {c->r, c->g, c->b, c->a}) {
        // Negated comparison so NaN fails the check too.
        if (!(ch >= 0.0f && ch <= 1.0f)) {
          throw Error(Errc::BadValue, "color channel outside [0, 1]");
        }
      }
      cs.clear_color = *c;
      return;
    }
    case StateKey::Viewport: {
      const ViewportRect* r = std::get_if<ViewportRect>(&value);
      if (!r) throw Error(Errc::BadValue, "viewport takes a rect");
      if (r->w < 0 || r->h < 0) throw Error(Errc::BadValue, "viewport extent negative");
      cs.viewport = *r;
      return;
    }
  }
  throw Error(Errc::UnknownKey, "state key " + std::to_string(static_cast<unsigned>(key)));
}

void Driver::bind(uint32_t ctx, ResourceKind kind, uint32_t id) {
  require_kind(kind);
  ContextState& cs = live_context(ctx);
  if (id != 0 && !cs.resources[kind_index(kind)].count(id)) {
    throw Error(Errc::UnknownId, std::string(kind_name(kind)) + " " + std::to_string(id));
  }
  cs.bound[kind_index(kind)] = id;
}

void Driver::clear(uint32_t ctx) {
  ContextState& cs = live_context(ctx);
  // Clear ignores the viewport: it repaints the entire framebuffer.
  const uint8_t px[4] = {
      quantize_unit(cs.clear_color.r),
      quantize_unit(cs.clear_color.g),
      quantize_unit(cs.clear_color.b),
      quantize_unit(cs.clear_color.a),
  };
  auto& p = cs.fb.pixels;
  for (size_t i = 0; i < p.size(); i += 4) {
    p[i] = px[0];
    p[i + 1] = px[1];
    p[i + 2] = px[2];
    p[i + 3] = px[3];
  }
}

void Driver::draw_triangle(uint32_t ctx, Vec2i v0, Vec2i v1, Vec2i v2, Color4b color) {
  ContextState& cs = live_context(ctx);

  int128 area2 = cross(static_cast<int64_t>(v1.x) - v0.x, static_cast<int64_t>(v1.y) - v0.y,
                       static_cast<int64_t>(v2.x) - v0.x, static_cast<int64_t>(v2.y) - v0.y);
  if (area2 == 0) return;  // degenerate triangles draw nothing
  if (area2 < 0) std::swap(v1, v2);

  // Raster bounds: viewport clipped to the framebuffer, then to the triangle's
  // bounding box. Half-open [x0, x1) x [y0, y1), computed in int64 because
  // viewport x + w can overflow int32.
  int64_t x0 = std::max<int64_t>(0, cs.viewport.x);
  int64_t y0 = std::max<int64_t>(0, cs.viewport.y);
  int64_t x1 = std::min<int64_t>(cs.fb.w, static_cast<int64_t>(cs.viewport.x) + cs.viewport.w);
  int64_t y1 = std::min<int64_t>(cs.fb.h, static_cast<int64_t>(cs.viewport.y) + cs.viewport.h);
  x0 = std::max<int64_t>(x0, std::min({v0.x, v1.x, v2.x}));
  y0 = std::max<int64_t>(y0, std::min({v0.y, v1.y, v2.y}));
  x1 = std::min(x1, static_cast<int64_t>(std::max({v0.x, v1.x, v2.x})) + 1);
  y1 = std::min(y1, static_cast<int64_t>(std::max({v0.y, v1.y, v2.y})) + 1);
  if (x0 >= x1 || y0 >= y1) return;

  Edge e01 = make_edge(v0, v1, x0, y0);
  Edge e12 = make_edge(v1, v2, x0, y0);
  Edge e20 = make_edge(v2, v0, x0, y0);

  const uint8_t px[4] = {color.r, color.g, color.b, color.a};
  for (int64_t y = y0; y < y1; ++y) {
    int128 w0 = e01.w_row;
    int128 w1 = e12.w_row;
    int128 w2 = e20.w_row;
    size_t at = (static_cast<size_t>(y) * cs.fb.w + static_cast<size_t>(x0)) * 4;
    for (int64_t x = x0; x < x1; ++x, at += 4) {
      if (w0 >= 0 && w1 >= 0 && w2 >= 0) {
        cs.fb.pixels[at] = px[0];
        cs.fb.pixels[at + 1] = px[1];
        cs.fb.pixels[at + 2] = px[2];
        cs.fb.pixels[at + 3] = px[3];
      }
      w0 += e01.step_x;
      w1 += e12.step_x;
      w2 += e20.step_x;
    }
    e01.w_row += e01.step_y;
    e12.w_row += e12.step_y;
    e20.w_row += e20.step_y;
  }
}

std::vector<uint8_t> Driver::read_framebuffer(uint32_t ctx) const {
  return live_context(ctx).fb.pixels;
}

uint64_t Driver::framebuffer_hash(uint32_t ctx) const {
  return fnv1a64(live_context(ctx).fb.pixels);
}

const ContextState& Driver::context(uint32_t ctx) const { return live_context(ctx); }

std::vector<uint32_t> Driver::context_ids() const {
  std::vector<uint32_t> ids;
  ids.reserve(contexts_.size());
  for (const auto& [id, cs] : contexts_) ids.push_back(id);
  return ids;
}

}  // namespace glckpt::minigl
