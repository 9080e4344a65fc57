#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <functional>

#include "doctest.h"
#include "glckpt/displayserver.hpp"

using namespace glckpt;
using namespace glckpt::display;

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

std::vector<uint8_t> solid_pixels(int32_t w, int32_t h, uint8_t v) {
  return std::vector<uint8_t>(static_cast<size_t>(w) * h * 4, v);
}

}  // namespace

TEST_CASE("connecting works unless the server refuses") {
  DisplayConnection conn = DisplayConnection::connect(":0");
  CHECK(conn.connected());
  CHECK(conn.name() == ":0");
  CHECK(conn.window_count() == 0);

  CHECK(thrown_code([] { DisplayConnection::connect("refuse:down"); }) ==
        Errc::DisplayUnavailable);
}

TEST_CASE("windows get distinct ids and remember their metadata") {
  DisplayConnection conn = DisplayConnection::connect(":0");
  WindowId a = conn.create_window(64, 64, "main");
  WindowId b = conn.create_window(32, 16, "tools");
  CHECK(a != b);
  CHECK(a != 0);

  CHECK(conn.window(a).title == "main");
  CHECK(conn.window(b).width == 32);
  CHECK(!conn.window(a).last_presented_hash.has_value());
  CHECK(thrown_code([&] { conn.window(12345); }) == Errc::UnknownWindow);
  CHECK(thrown_code([&] { conn.create_window(0, 5, "x"); }) == Errc::BadValue);
}

TEST_CASE("present records the pixel hash, strictly sized") {
  DisplayConnection conn = DisplayConnection::connect(":0");
  WindowId win = conn.create_window(8, 4, "w");

  auto px = solid_pixels(8, 4, 7);
  conn.present(win, px, 8, 4);
  REQUIRE(conn.window(win).last_presented_hash.has_value());
  CHECK(*conn.window(win).last_presented_hash == fnv1a64(px));

  CHECK(thrown_code([&] { conn.present(999, px, 8, 4); }) == Errc::UnknownWindow);
  CHECK(thrown_code([&] { conn.present(win, px, 4, 8); }) == Errc::DimensionMismatch);
  auto short_px = solid_pixels(8, 4, 7);
  short_px.pop_back();
  CHECK(thrown_code([&] { conn.present(win, short_px, 8, 4); }) == Errc::DimensionMismatch);
}

TEST_CASE("disconnect hands back metadata and kills the connection") {
  DisplayConnection conn = DisplayConnection::connect(":0");
  WindowId a = conn.create_window(64, 64, "main");
  conn.present(a, solid_pixels(64, 64, 1), 64, 64);
  conn.create_window(10, 10, "side");

  auto metas = conn.disconnect_for_checkpoint();
  REQUIRE(metas.size() == 2);
  CHECK(metas[0].id == a);
  CHECK(metas[0].last_presented_hash.has_value());
  CHECK(!conn.connected());
  CHECK(conn.window_count() == 0);

  CHECK(thrown_code([&] { conn.create_window(5, 5, "late"); }) == Errc::NotConnected);
  CHECK(thrown_code([&] { conn.present(a, solid_pixels(64, 64, 1), 64, 64); }) ==
        Errc::NotConnected);
  CHECK(thrown_code([&] { conn.disconnect_for_checkpoint(); }) == Errc::NotConnected);
}

TEST_CASE("reconnect rebuilds windows under new ids") {
  DisplayConnection conn = DisplayConnection::connect(":0");
  WindowId a = conn.create_window(64, 48, "main");
  WindowId b = conn.create_window(20, 20, "side");
  conn.present(a, solid_pixels(64, 48, 9), 64, 48);
  auto metas = conn.disconnect_for_checkpoint();

  auto [fresh, old_to_new] = DisplayConnection::reconnect_from_metadata(":0", metas);
  REQUIRE(old_to_new.size() == 2);
  CHECK(old_to_new.at(a) != a);  // ids are process-global and never reused
  CHECK(old_to_new.at(b) != b);
  CHECK(fresh.window(old_to_new.at(a)).width == 64);
  CHECK(fresh.window(old_to_new.at(a)).title == "main");
  // The new window has not been presented to yet.
  CHECK(!fresh.window(old_to_new.at(a)).last_presented_hash.has_value());

  CHECK(thrown_code([&] {
          DisplayConnection::reconnect_from_metadata("refuse:still-down", metas);
        }) == Errc::DisplayUnavailable);
}

TEST_CASE("simultaneous connections never share window ids") {
  DisplayConnection one = DisplayConnection::connect(":0");
  DisplayConnection two = DisplayConnection::connect(":1");
  std::vector<WindowId> ids;
  for (int i = 0; i < 10; ++i) {
    ids.push_back(one.create_window(4, 4, "a"));
    ids.push_back(two.create_window(4, 4, "b"));
  }
  std::sort(ids.begin(), ids.end());
  CHECK(std::adjacent_find(ids.begin(), ids.end()) == ids.end());
}
