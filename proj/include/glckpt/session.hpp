#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "glckpt/common.hpp"
#include "glckpt/displayserver.hpp"
#include "glckpt/interpose.hpp"
#include "glckpt/logstore.hpp"
#include "glckpt/minigl.hpp"
#include "glckpt/splitproc.hpp"

// A session is one application's view of the whole stack: a driver instance
// and display connection (the lower half), the interposition table and call
// log (the upper half's record of everything it asked for), and the tagged
// address-space model tying them together.
//
// checkpoint() cuts an image of the upper half only and freezes the session;
// restore() builds a brand-new session from such an image, relaunching the
// lower half from scratch and replaying the log so that every virtual id the
// application still holds points at a fresh real object with identical state.

namespace glckpt::session {

// The upper thread id every session starts with.
inline constexpr uint32_t kMainThread = 1;

struct SessionConfig {
  uint64_t driver_seed = 0;
  minigl::FbSize fb_size;
  std::string display_name = ":0";
};

// A session object is used from one thread at a time. Quiescence around
// checkpoint() is the caller's obligation; the live/frozen gate turns use of
// a checkpointed session into SessionNotLive instead of undefined behavior.
class Session {
 public:
  static Session start(SessionConfig config = {});

  // Rebuilds a live session from an image, in this order: fresh driver with
  // new_seed, upper memory mapped back byte-identically, display reconnected
  // with windows recreated, id table rebuilt by replaying the log, thread
  // pairings re-established. The fb size must match the one the image was
  // recorded with; the replayed framebuffer bytes are the proof.
  static Session restore(const splitproc::CheckpointImage& image, uint64_t new_seed,
                         const std::string& display_name = ":0", minigl::FbSize fb = {});

  // Intercepted driver API. Ids in and out are virtual.
  uint32_t create_context(uint32_t thread = kMainThread);
  uint32_t gen_resource(uint32_t vctx, minigl::ResourceKind kind, uint32_t thread = kMainThread);
  void delete_resource(uint32_t vctx, minigl::ResourceKind kind, uint32_t virt,
                       uint32_t thread = kMainThread);
  void upload_data(uint32_t vctx, minigl::ResourceKind kind, uint32_t virt,
                   std::vector<uint8_t> bytes, uint32_t thread = kMainThread);
  void set_state(uint32_t vctx, minigl::StateKey key, const minigl::StateValue& value,
                 uint32_t thread = kMainThread);
  void bind(uint32_t vctx, minigl::ResourceKind kind, uint32_t virt,
            uint32_t thread = kMainThread);
  void clear(uint32_t vctx, uint32_t thread = kMainThread);
  void draw_triangle(uint32_t vctx, minigl::Vec2i v0, minigl::Vec2i v1, minigl::Vec2i v2,
                     minigl::Color4b color, uint32_t thread = kMainThread);

  // Pure reads: unlogged, usable only while live.
  std::vector<uint8_t> read_framebuffer(uint32_t vctx) const;
  uint64_t framebuffer_hash(uint32_t vctx) const;
  // Hash over every context's framebuffer in ascending virtual-context order;
  // the offset basis when no contexts exist. This is the session-level
  // equivalence check: equal combined hashes mean equal pixels everywhere.
  uint64_t combined_framebuffer_hash() const;

  // Window handles are virtualized exactly like resource ids, so they too
  // survive a restore unchanged from the application's point of view.
  uint32_t create_window(int32_t width, int32_t height, const std::string& title);
  // Pushes a context's framebuffer to a window. Not logged: presentation has
  // no driver-side effect, and restored windows are re-presented by the
  // application the next time it draws.
  void present(uint32_t vwin, uint32_t vctx);

  // Models application memory the image must carry byte-identically.
  uint32_t tag_upper_region(std::string label, std::vector<uint8_t> bytes);
  // Declares an additional upper thread and pairs it with a lower-half slot.
  void register_upper_thread(uint32_t upper);

  // Cuts the checkpoint image and freezes this session: the display
  // connection is shut down, only UPPER regions travel, and the driver plus
  // all LOWER regions are dropped. With prune_log, the log is reduced to its
  // final-state core first; the report of that reduction lands in
  // *prune_report when given.
  splitproc::CheckpointImage checkpoint(bool prune_log = true,
                                        logstore::PruneReport* prune_report = nullptr);

  bool live() const { return live_; }
  // Number of restores behind this session: 0 for a started session, then
  // image epoch + 1 after each restore.
  uint32_t epoch() const { return epoch_; }
  const SessionConfig& config() const { return config_; }
  const logstore::CallLog& log() const { return log_; }
  const interpose::VirtualIdTable& vids() const { return vids_; }
  const splitproc::AddressSpaceModel& address_space() const { return space_; }
  const display::DisplayConnection& display() const;
  const minigl::Driver& driver() const;

 private:
  Session() = default;

  void require_live() const;
  void tag_lower_regions();

  SessionConfig config_;
  uint32_t epoch_ = 0;
  bool live_ = false;
  std::unique_ptr<minigl::Driver> driver_;
  std::optional<display::DisplayConnection> display_;
  interpose::VirtualIdTable vids_;
  logstore::CallLog log_;
  splitproc::AddressSpaceModel space_;
  uint32_t next_lower_thread_ = 1;
};

}  // namespace glckpt::session
