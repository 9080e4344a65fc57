#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <variant>
#include <vector>

#include "glckpt/common.hpp"

// A miniature GL-style driver: contexts, four resource kinds, a couple of state
// slots, and a software rasterizer over a per-context RGBA8 framebuffer. It is
// the "lower half" that checkpointing deliberately throws away, so everything
// observable must be reachable again by replaying the call log: given the same
// seed and the same call sequence, every id, payload, and pixel is identical.

namespace glckpt::minigl {

enum class ResourceKind : uint8_t {
  Shader = 1,
  Program = 2,
  Buffer = 3,
  Texture = 4,
};

inline constexpr ResourceKind kAllKinds[] = {
    ResourceKind::Shader,
    ResourceKind::Program,
    ResourceKind::Buffer,
    ResourceKind::Texture,
};
inline constexpr size_t kKindCount = 4;

inline bool kind_valid(uint8_t raw) { return raw >= 1 && raw <= 4; }
inline size_t kind_index(ResourceKind k) { return static_cast<size_t>(k) - 1; }
const char* kind_name(ResourceKind k);

enum class StateKey : uint8_t {
  ClearColor = 1,
  Viewport = 2,
};

struct ClearColor {
  float r = 0.0f, g = 0.0f, b = 0.0f, a = 0.0f;

  bool operator==(const ClearColor&) const = default;
};

struct ViewportRect {
  int32_t x = 0, y = 0, w = 0, h = 0;

  bool operator==(const ViewportRect&) const = default;
};

using StateValue = std::variant<ClearColor, ViewportRect>;

struct Vec2i {
  int32_t x = 0, y = 0;

  bool operator==(const Vec2i&) const = default;
};

struct Color4b {
  uint8_t r = 0, g = 0, b = 0, a = 0;

  bool operator==(const Color4b&) const = default;
};

struct FbSize {
  int32_t w = 64, h = 64;
};

struct Resource {
  ResourceKind kind;
  uint32_t id = 0;
  std::vector<uint8_t> payload;
};

struct Framebuffer {
  int32_t w = 0, h = 0;
  std::vector<uint8_t> pixels;  // RGBA8, row-major, w*h*4 bytes
};

struct ContextState {
  std::array<std::map<uint32_t, Resource>, kKindCount> resources;
  std::array<uint32_t, kKindCount> bound{};  // real id per kind, 0 = unbound
  ClearColor clear_color;
  ViewportRect viewport;  // starts covering the whole framebuffer
  Framebuffer fb;
};

// Unit float -> byte with round-half-up, so 0.5 lands on 128, not 127.
inline uint8_t quantize_unit(float c) {
  double scaled = static_cast<double>(c) * 255.0 + 0.5;
  return static_cast<uint8_t>(scaled);  // truncation == floor, scaled is in [0.5, 255.5]
}

// Resource-id sequence for a given driver seed. Knuth multiplicative hash over a
// monotone counter, folded into [1, 2^31]; seed 0 degrades to plain sequential
// ids, which keeps hand-written tests readable.
inline uint32_t allocator_id(uint64_t seed, uint64_t n) {
  // Both branches fold into [1, 2^31] so id 0 can never escape, no matter how
  // far the counter runs.
  uint64_t mixed = seed == 0 ? n : seed * 2654435761ull + n * 40503ull;
  return static_cast<uint32_t>(1 + (mixed % 0x80000000ull));
}

class Driver {
 public:
  explicit Driver(uint64_t seed, FbSize fb = {});

  uint64_t seed() const { return seed_; }
  FbSize fb_size() const { return fb_; }

  uint32_t create_context();
  uint32_t gen_resource(uint32_t ctx, ResourceKind kind);
  void delete_resource(uint32_t ctx, ResourceKind kind, uint32_t id);
  void upload_data(uint32_t ctx, ResourceKind kind, uint32_t id, std::vector<uint8_t> bytes);
  void set_state(uint32_t ctx, StateKey key, const StateValue& value);
  void bind(uint32_t ctx, ResourceKind kind, uint32_t id);
  void clear(uint32_t ctx);
  void draw_triangle(uint32_t ctx, Vec2i v0, Vec2i v1, Vec2i v2, Color4b color);

  // Pure observers: no state change, and the interposition layer never logs them.
  std::vector<uint8_t> read_framebuffer(uint32_t ctx) const;
  uint64_t framebuffer_hash(uint32_t ctx) const;
  const ContextState& context(uint32_t ctx) const;
  std::vector<uint32_t> context_ids() const;

 private:
  ContextState& live_context(uint32_t ctx);
  const ContextState& live_context(uint32_t ctx) const;
  Resource& live_resource(ContextState& cs, ResourceKind kind, uint32_t id);

  uint64_t seed_;
  FbSize fb_;
  uint32_t next_context_serial_ = 1;
  uint64_t alloc_counter_ = 0;
  std::map<uint32_t, ContextState> contexts_;
};

}  // namespace glckpt::minigl
