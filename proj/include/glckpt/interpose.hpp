#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include "glckpt/common.hpp"
#include "glckpt/minigl.hpp"
#include "glckpt/wire.hpp"

// Interposition layer: sits between application code and the driver, hands the
// application stable virtual ids, and records every state-changing call. After
// a restore the driver underneath is a fresh instance with entirely different
// real ids; the application never notices because it only ever held virtuals.

namespace glckpt::interpose {

// One translation namespace per handle type. Values are wire format.
enum class IdSpace : uint8_t {
  Context = 0,
  Shader = 1,
  Program = 2,
  Buffer = 3,
  Texture = 4,
  Window = 5,
};

inline constexpr size_t kIdSpaceCount = 6;

inline IdSpace space_for_kind(minigl::ResourceKind kind) {
  return static_cast<IdSpace>(static_cast<uint8_t>(kind));
}

const char* space_name(IdSpace space);

// Bijective virtual<->real map per id space. Virtual ids count up from 1 and
// are never reused, even after the resource they named is destroyed; 0 is the
// reserved "no object" handle on both sides and is never stored.
class VirtualIdTable {
 public:
  // Fresh virtual id for a newly created real object (recording path).
  uint32_t allocate(IdSpace space, uint32_t real);
  // Re-establish a specific virtual id (replay/restore path).
  void install(IdSpace space, uint32_t virt, uint32_t real);
  // virtual -> real; 0 passes through. Unknown virtuals are stale handles.
  uint32_t resolve(IdSpace space, uint32_t virt) const;
  // real -> virtual; 0 passes through.
  uint32_t reverse(IdSpace space, uint32_t real) const;
  // Point an existing virtual id at the real id a relaunched driver handed out.
  void rebind(IdSpace space, uint32_t virt, uint32_t new_real);
  void erase(IdSpace space, uint32_t virt);

  bool contains(IdSpace space, uint32_t virt) const;
  size_t size(IdSpace space) const;
  uint32_t next_virtual(IdSpace space) const;
  void set_next_virtual(IdSpace space, uint32_t next);
  // (virtual, real) pairs in ascending virtual order.
  std::vector<std::pair<uint32_t, uint32_t>> entries(IdSpace space) const;
  // Live virtual ids in ascending order.
  std::vector<uint32_t> virtuals(IdSpace space) const;

  void serialize(wire::ByteWriter& out) const;
  static VirtualIdTable deserialize(wire::ByteReader& in);

  bool operator==(const VirtualIdTable& other) const = default;

 private:
  struct Space {
    std::map<uint32_t, uint32_t> v2r;
    std::map<uint32_t, uint32_t> r2v;
    uint32_t next = 1;
    bool operator==(const Space&) const = default;
  };

  Space& space(IdSpace s) { return spaces_[static_cast<size_t>(s)]; }
  const Space& space(IdSpace s) const { return spaces_[static_cast<size_t>(s)]; }

  std::array<Space, kIdSpaceCount> spaces_;
};

enum class Opcode : uint16_t {
  CreateContext = 1,
  GenResource = 2,
  DeleteResource = 3,
  UploadData = 4,
  SetState = 5,
  Bind = 6,
  Clear = 7,
  DrawTriangle = 8,
  ReadFramebuffer = 9,
};

enum class CallClass : uint8_t {
  ResourceCreate = 1,
  ResourceDestroy = 2,
  StateSet = 3,
  DataUpload = 4,
  Bind = 5,
  Draw = 6,
  Clear = 7,
  PureRead = 8,
};

// Total over valid opcodes; raw values outside the enum raise BadValue.
CallClass classify(Opcode op);

// One intercepted call. All ids (ctx included) are virtual, so a record is
// replayable against any driver instance. `fault` marks a call the driver (or
// id resolution) rejected; it carries the attempted arguments but changed
// nothing, and replay skips it.
struct CallRecord {
  uint64_t seq = 0;  // 1-based, gap-free in a freshly recorded log
  uint32_t thread = 0;
  uint32_t ctx = 0;  // 0 for create_context itself
  Opcode opcode{};
  CallClass cls{};
  bool fault = false;
  std::vector<uint8_t> args;

  bool operator==(const CallRecord&) const = default;
};

// Argument payloads, one struct per opcode that has any. Creation results ride
// inside args (the record layout has no separate result field).
struct CreateContextArgs {
  uint32_t result_virtual = 0;
};
struct GenResourceArgs {
  minigl::ResourceKind kind{};
  uint32_t result_virtual = 0;
};
struct DeleteResourceArgs {
  minigl::ResourceKind kind{};
  uint32_t virt = 0;
};
struct UploadDataArgs {
  minigl::ResourceKind kind{};
  uint32_t virt = 0;
  std::vector<uint8_t> bytes;
};
struct SetStateArgs {
  minigl::StateKey key{};
  minigl::StateValue value;
};
struct BindArgs {
  minigl::ResourceKind kind{};
  uint32_t virt = 0;
};
struct DrawTriangleArgs {
  minigl::Vec2i v0, v1, v2;
  minigl::Color4b color;
};

std::vector<uint8_t> encode_args(const CreateContextArgs& a);
std::vector<uint8_t> encode_args(const GenResourceArgs& a);
std::vector<uint8_t> encode_args(const DeleteResourceArgs& a);
std::vector<uint8_t> encode_args(const UploadDataArgs& a);
std::vector<uint8_t> encode_args(const SetStateArgs& a);
std::vector<uint8_t> encode_args(const BindArgs& a);
std::vector<uint8_t> encode_args(const DrawTriangleArgs& a);

// Decoders validate shape (exact length, known tags) and raise `err` on any
// mismatch: ReplayDivergence when replaying, TruncatedLog when deserializing.
CreateContextArgs decode_create_context(const std::vector<uint8_t>& args,
                                        Errc err = Errc::ReplayDivergence);
GenResourceArgs decode_gen_resource(const std::vector<uint8_t>& args,
                                    Errc err = Errc::ReplayDivergence);
DeleteResourceArgs decode_delete_resource(const std::vector<uint8_t>& args,
                                          Errc err = Errc::ReplayDivergence);
UploadDataArgs decode_upload_data(const std::vector<uint8_t>& args,
                                  Errc err = Errc::ReplayDivergence);
SetStateArgs decode_set_state(const std::vector<uint8_t>& args,
                              Errc err = Errc::ReplayDivergence);
BindArgs decode_bind(const std::vector<uint8_t>& args, Errc err = Errc::ReplayDivergence);
DrawTriangleArgs decode_draw_triangle(const std::vector<uint8_t>& args,
                                      Errc err = Errc::ReplayDivergence);

// Where intercepted records go. Implemented by the call log; tests substitute
// their own. next_seq must hand out exactly the value append will accept.
class LogSink {
 public:
  virtual ~LogSink() = default;
  virtual uint64_t next_seq() const = 0;
  virtual void append(CallRecord&& rec) = 0;
};

// The intercept engine: resolve virtual arguments, forward to the driver, give
// fresh creations a virtual id, log the call. A single mutex makes each
// intercepted call atomic, which is what gives concurrent callers a total
// order of log appends consistent with the driver's execution order.
//
// Calls the driver rejects are logged as fault records and rethrown; nothing
// else changes, so the log stays an exact account of what the driver did.
class Interceptor {
 public:
  Interceptor(minigl::Driver& driver, VirtualIdTable& vids, LogSink& log)
      : driver_(driver), vids_(vids), log_(log) {}

  uint32_t create_context(uint32_t thread);
  uint32_t gen_resource(uint32_t thread, uint32_t vctx, minigl::ResourceKind kind);
  void delete_resource(uint32_t thread, uint32_t vctx, minigl::ResourceKind kind, uint32_t virt);
  void upload_data(uint32_t thread, uint32_t vctx, minigl::ResourceKind kind, uint32_t virt,
                   std::vector<uint8_t> bytes);
  void set_state(uint32_t thread, uint32_t vctx, minigl::StateKey key,
                 const minigl::StateValue& value);
  void bind(uint32_t thread, uint32_t vctx, minigl::ResourceKind kind, uint32_t virt);
  void clear(uint32_t thread, uint32_t vctx);
  void draw_triangle(uint32_t thread, uint32_t vctx, minigl::Vec2i v0, minigl::Vec2i v1,
                     minigl::Vec2i v2, minigl::Color4b color);

  // Pure reads pass through unlogged, faults included.
  std::vector<uint8_t> read_framebuffer(uint32_t vctx) const;
  uint64_t framebuffer_hash(uint32_t vctx) const;

 private:
  // Runs one call under the lock: forward, then log success or fault.
  template <typename Forward>
  void run_logged(uint32_t thread, uint32_t vctx, Opcode op, std::vector<uint8_t> args,
                  Forward&& forward);

  void append_record(uint32_t thread, uint32_t vctx, Opcode op, bool fault,
                     std::vector<uint8_t> args);

  minigl::Driver& driver_;
  VirtualIdTable& vids_;
  LogSink& log_;
  mutable std::mutex mu_;
};

}  // namespace glckpt::interpose
