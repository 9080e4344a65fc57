#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "glckpt/common.hpp"

// Stand-in for the display-server connection a real GL stack would hold. Its
// whole point is the lifecycle: a connection cannot be checkpointed, so it is
// torn down to portable window metadata before the image is cut and rebuilt
// from that metadata afterwards, at which point the server hands out entirely
// new window ids.

namespace glckpt::display {

using WindowId = uint32_t;

struct WindowMeta {
  WindowId id = 0;
  int32_t width = 0;
  int32_t height = 0;
  std::string title;
  // Hash of the pixels last pushed to the window, if any. Survives into the
  // checkpoint for diagnostics; a reconnected window starts unpresented.
  std::optional<uint64_t> last_presented_hash;

  bool operator==(const WindowMeta&) const = default;
};

class DisplayConnection {
 public:
  // Display names with the "refuse:" prefix simulate a server that is down.
  static DisplayConnection connect(const std::string& name);

  // Tear down for checkpointing: hand back everything needed to rebuild the
  // windows later and drop the server-side state.
  std::vector<WindowMeta> disconnect_for_checkpoint();

  // Fresh connection with one new window per handed-back meta. Window ids are
  // newly issued; the returned map translates old id -> new id so callers can
  // fix up their references.
  static std::pair<DisplayConnection, std::map<WindowId, WindowId>> reconnect_from_metadata(
      const std::string& name, const std::vector<WindowMeta>& metas);

  WindowId create_window(int32_t width, int32_t height, const std::string& title);
  void present(WindowId win, const std::vector<uint8_t>& rgba, int32_t width, int32_t height);

  bool connected() const { return connected_; }
  const std::string& name() const { return name_; }
  const WindowMeta& window(WindowId win) const;
  std::vector<WindowId> window_ids() const;
  size_t window_count() const { return windows_.size(); }

 private:
  DisplayConnection() = default;

  void require_connected() const;

  std::string name_;
  bool connected_ = false;
  std::map<WindowId, WindowMeta> windows_;
};

}  // namespace glckpt::display
