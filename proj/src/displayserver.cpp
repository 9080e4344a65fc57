#include "glckpt/displayserver.hpp"

#include <atomic>

namespace glckpt::display {

namespace {

// Window ids are issued process-wide and never repeat, the way a real server's
// handles would not. A reconnect therefore always sees different ids, which is
// exactly the hazard the virtual-id layer exists to hide.
std::atomic<uint32_t> g_next_window_id{1};

}  // namespace

DisplayConnection DisplayConnection::connect(const std::string& name) {
  if (name.rfind("refuse:", 0) == 0) {
    throw Error(Errc::DisplayUnavailable, name);
  }
  DisplayConnection conn;
  conn.name_ = name;
  conn.connected_ = true;
  return conn;
}

void DisplayConnection::require_connected() const {
  if (!connected_) throw Error(Errc::NotConnected, name_);
}

WindowId DisplayConnection::create_window(int32_t width, int32_t height,
                                          const std::string& title) {
  require_connected();
  if (width <= 0 || height <= 0) {
    throw Error(Errc::BadValue, "window dimensions must be positive");
  }
  if (title.size() > 65535) {
    throw Error(Errc::BadValue, "window title too long");
  }
  WindowId id = g_next_window_id.fetch_add(1);
  windows_.emplace(id, WindowMeta{id, width, height, title, std::nullopt});
  return id;
}

void DisplayConnection::present(WindowId win, const std::vector<uint8_t>& rgba, int32_t width,
                                int32_t height) {
  require_connected();
  auto it = windows_.find(win);
  if (it == windows_.end()) throw Error(Errc::UnknownWindow, std::to_string(win));
  WindowMeta& meta = it->second;
  if (width != meta.width || height != meta.height ||
      rgba.size() != static_cast<size_t>(width) * height * 4) {
    throw Error(Errc::DimensionMismatch,
                "presented " + std::to_string(width) + "x" + std::to_string(height) + " to a " +
                    std::to_string(meta.width) + "x" + std::to_string(meta.height) + " window");
  }
  meta.last_presented_hash = fnv1a64(rgba);
}

std::vector<WindowMeta> DisplayConnection::disconnect_for_checkpoint() {
  require_connected();
  std::vector<WindowMeta> metas;
  metas.reserve(windows_.size());
  for (const auto& [id, meta] : windows_) metas.push_back(meta);
  windows_.clear();
  connected_ = false;
  return metas;
}

std::pair<DisplayConnection, std::map<WindowId, WindowId>>
DisplayConnection::reconnect_from_metadata(const std::string& name,
                                           const std::vector<WindowMeta>& metas) {
  DisplayConnection conn = connect(name);
  std::map<WindowId, WindowId> old_to_new;
  for (const WindowMeta& meta : metas) {
    WindowId fresh = conn.create_window(meta.width, meta.height, meta.title);
    old_to_new[meta.id] = fresh;
    // Deliberately no last_presented_hash: nothing has been drawn to the new
    // window yet. The caller re-presents after replay.
  }
  return {std::move(conn), std::move(old_to_new)};
}

const WindowMeta& DisplayConnection::window(WindowId win) const {
  auto it = windows_.find(win);
  if (it == windows_.end()) throw Error(Errc::UnknownWindow, std::to_string(win));
  return it->second;
}

std::vector<WindowId> DisplayConnection::window_ids() const {
  std::vector<WindowId> ids;
  ids.reserve(windows_.size());
  for (const auto& [id, meta] : windows_) ids.push_back(id);
  return ids;
}

}  // namespace glckpt::display
