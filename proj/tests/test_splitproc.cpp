#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "glckpt/session.hpp"
#include "glckpt/splitproc.hpp"

using namespace glckpt;
using namespace glckpt::splitproc;
using interpose::IdSpace;
using minigl::ResourceKind;
using session::Session;
using session::SessionConfig;

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

// Recomputes the whole-file trailer after test-side byte surgery, so the
// deserializer's structural validation is reached instead of the checksum.
std::vector<uint8_t> refix_trailer(std::vector<uint8_t> bytes) {
  REQUIRE(bytes.size() > 8);
  uint64_t sum = fnv1a64(bytes.data(), bytes.size() - 8);
  for (size_t i = 0; i < 8; ++i) {
    bytes[bytes.size() - 8 + i] = static_cast<uint8_t>(sum >> (8 * i));
  }
  return bytes;
}

logstore::CallLog recorded_log(uint64_t seed, int ops) {
  minigl::Driver driver(seed, {});
  interpose::VirtualIdTable vids;
  logstore::CallLog log;
  interpose::Interceptor icpt(driver, vids, log);
  std::mt19937 rng(static_cast<uint32_t>(seed ^ 0x5eed));
  uint32_t ctx = icpt.create_context(1);
  std::vector<uint32_t> bufs;
  for (int i = 0; i < ops; ++i) {
    switch (rng() % 6) {
      case 0:
        bufs.push_back(icpt.gen_resource(1, ctx, ResourceKind::Buffer));
        break;
      case 1:
        if (!bufs.empty()) {
          icpt.upload_data(1, ctx, ResourceKind::Buffer, bufs[rng() % bufs.size()],
                           {static_cast<uint8_t>(rng()), static_cast<uint8_t>(rng())});
        }
        break;
      case 2:
        icpt.set_state(1, ctx, minigl::StateKey::ClearColor,
                       minigl::ClearColor{0.25f, 0.5f, 0.75f, 1.0f});
        break;
      case 3:
        if (!bufs.empty()) icpt.bind(1, ctx, ResourceKind::Buffer, bufs[rng() % bufs.size()]);
        break;
      case 4:
        icpt.clear(1, ctx);
        break;
      case 5:
        icpt.draw_triangle(1, ctx, {int32_t(rng() % 64), int32_t(rng() % 64)},
                           {int32_t(rng() % 64), int32_t(rng() % 64)},
                           {int32_t(rng() % 64), int32_t(rng() % 64)},
                           {static_cast<uint8_t>(rng()), 80, 90, 255});
        break;
    }
  }
  return log;
}

std::vector<uint8_t> random_bytes(std::mt19937& rng, size_t len) {
  std::vector<uint8_t> bytes(len);
  for (auto& b : bytes) b = static_cast<uint8_t>(rng());
  return bytes;
}

CheckpointImage random_image(uint32_t seed) {
  std::mt19937 rng(seed);
  CheckpointImage img;
  img.epoch = rng() % 10;

  size_t region_count = 1 + rng() % 4;
  for (size_t i = 0; i < region_count; ++i) {
    // Labels are arbitrary bytes, embedded NUL included.
    std::string label = "region-" + std::to_string(i);
    if (rng() % 3 == 0) label += std::string(1, '\0') + "tail";
    img.upper_regions.push_back({label, random_bytes(rng, 1 + rng() % 200)});
  }

  img.log = rng() % 4 == 0 ? logstore::CallLog{} : recorded_log(seed, 1 + rng() % 40);
  // A coherent image stamps the same epoch on itself and its log.
  img.log.set_epoch(img.epoch);

  for (size_t space = 0; space < interpose::kIdSpaceCount; ++space) {
    uint32_t virt = 0;
    size_t entries = rng() % 5;
    for (size_t i = 0; i < entries; ++i) {
      virt += 1 + rng() % 3;
      img.vids.install(static_cast<IdSpace>(space), virt, 1 + rng() % 100000);
    }
  }

  uint32_t next_window_virt = 1;
  size_t window_count = rng() % 3;
  for (size_t i = 0; i < window_count; ++i) {
    display::WindowMeta meta;
    meta.id = next_window_virt++;
    meta.width = 1 + static_cast<int32_t>(rng() % 512);
    meta.height = 1 + static_cast<int32_t>(rng() % 512);
    meta.title = rng() % 4 == 0 ? std::string("nul\0window", 10) : "window-" + std::to_string(i);
    if (rng() % 2 == 0) meta.last_presented_hash = (uint64_t(rng()) << 32) | rng();
    img.windows.push_back(meta);
  }

  uint32_t thread = 0;
  size_t thread_count = rng() % 4;
  for (size_t i = 0; i < thread_count; ++i) {
    thread += 1 + rng() % 5;
    img.threads.push_back(thread);
  }
  return img;
}

// A small fixed scene touching every part of a session: resources with data,
// state, pixels, and a presented window.
struct Scene {
  uint32_t ctx = 0, buf = 0, tex = 0, win = 0;
};

Scene paint_scene(Session& s) {
  Scene scene;
  scene.ctx = s.create_context();
  scene.buf = s.gen_resource(scene.ctx, ResourceKind::Buffer);
  scene.tex = s.gen_resource(scene.ctx, ResourceKind::Texture);
  s.upload_data(scene.ctx, ResourceKind::Buffer, scene.buf, {10, 20, 30});
  s.upload_data(scene.ctx, ResourceKind::Texture, scene.tex, {7});
  s.bind(scene.ctx, ResourceKind::Buffer, scene.buf);
  s.set_state(scene.ctx, minigl::StateKey::ClearColor, minigl::ClearColor{0.1f, 0.2f, 0.3f, 1.0f});
  s.clear(scene.ctx);
  s.set_state(scene.ctx, minigl::StateKey::Viewport, minigl::ViewportRect{0, 0, 64, 64});
  s.draw_triangle(scene.ctx, {2, 2}, {50, 8}, {14, 44}, {210, 60, 90, 255});
  scene.win = s.create_window(64, 64, "scene");
  s.present(scene.win, scene.ctx);
  return scene;
}

// Continues a scene using only handles captured before a checkpoint; this is
// the workload suffix in crash-equivalence checks.
void continue_scene(Session& s, const Scene& scene) {
  s.upload_data(scene.ctx, ResourceKind::Buffer, scene.buf, {99, 98});
  s.set_state(scene.ctx, minigl::StateKey::Viewport, minigl::ViewportRect{8, 8, 40, 40});
  s.draw_triangle(scene.ctx, {10, 10}, {60, 20}, {20, 60}, {20, 220, 140, 255});
  s.delete_resource(scene.ctx, ResourceKind::Texture, scene.tex);
  s.present(scene.win, scene.ctx);
}

}  // namespace

TEST_CASE("address space tags and drops regions by half") {
  AddressSpaceModel space;
  uint32_t heap = space.tag_region(RegionTag::Upper, "app/heap", {1, 2, 3});
  uint32_t stack = space.tag_region(RegionTag::Upper, "app/stack", {4});
  uint32_t drv = space.tag_region(RegionTag::Lower, "sys/driver", {5, 6});
  CHECK(heap != stack);
  CHECK(space.region(heap).label == "app/heap");
  CHECK(space.region(drv).tag == RegionTag::Lower);
  CHECK(space.has_label("app/stack"));
  CHECK_FALSE(space.has_label("app/missing"));
  CHECK(space.regions_with_tag(RegionTag::Upper).size() == 2);
  CHECK(space.regions_with_tag(RegionTag::Lower).size() == 1);

  CHECK(thrown_code([&] { space.tag_region(RegionTag::Upper, "", {1}); }) == Errc::BadValue);
  CHECK(thrown_code([&] { space.tag_region(RegionTag::Upper, "app/empty", {}); }) ==
        Errc::BadValue);
  CHECK(thrown_code([&] {
          space.tag_region(RegionTag::Upper, std::string(65536, 'x'), {1});
        }) == Errc::BadValue);
  // Labels are unique across both halves, not per half.
  CHECK(thrown_code([&] { space.tag_region(RegionTag::Lower, "app/heap", {9}); }) ==
        Errc::DuplicateLabel);
  CHECK(thrown_code([&] { space.region(999); }) == Errc::UnknownId);

  CHECK(space.drop_regions_with_tag(RegionTag::Lower) == 1);
  CHECK(space.regions_with_tag(RegionTag::Lower).empty());
  CHECK(space.regions_with_tag(RegionTag::Upper).size() == 2);
  // The dropped label is free again: a relaunched lower half reclaims it.
  uint32_t drv2 = space.tag_region(RegionTag::Lower, "sys/driver", {7});
  CHECK(drv2 != drv);
}

TEST_CASE("thread pairing is one lower slot per upper thread") {
  AddressSpaceModel space;
  space.pair_thread(1, 100);
  space.pair_thread(2, 101);
  CHECK(space.threads().size() == 2);
  CHECK(space.threads().at(1) == 100);
  CHECK(thrown_code([&] { space.pair_thread(1, 102); }) == Errc::AlreadyPaired);

  space.clear_lower_pairings();
  CHECK(space.threads().size() == 2);
  CHECK_FALSE(space.threads().at(1).has_value());
  CHECK_FALSE(space.threads().at(2).has_value());

  // After the lower half relaunches, the same uppers pair with fresh slots.
  space.pair_thread(1, 200);
  space.pair_thread(2, 201);
  CHECK(space.threads().at(2) == 201);

  space.register_thread(3);
  CHECK_FALSE(space.threads().at(3).has_value());
  CHECK(thrown_code([&] { space.register_thread(3); }) == Errc::AlreadyPaired);
  space.pair_thread(3, 202);
  CHECK(space.threads().at(3) == 202);
}

TEST_CASE("image round-trips preserve every field and the exact bytes") {
  for (uint32_t seed = 1; seed <= 40; ++seed) {
    CAPTURE(seed);
    CheckpointImage img = random_image(seed);
    std::vector<uint8_t> bytes = img.serialize();
    CheckpointImage back = CheckpointImage::deserialize(bytes);
    CHECK(back == img);
    CHECK(back.serialize() == bytes);
  }
}

TEST_CASE("empty image round-trips") {
  CheckpointImage img;
  CheckpointImage back = CheckpointImage::deserialize(img.serialize());
  CHECK(back == img);
  CHECK(back.epoch == 0);
  CHECK(back.upper_regions.empty());
  CHECK(back.log.empty());
  CHECK(back.windows.empty());
  CHECK(back.threads.empty());
}

TEST_CASE("image deserialization rejects targeted damage") {
  CheckpointImage img = random_image(7);
  const std::vector<uint8_t> good = img.serialize();

  auto flipped = [&](size_t offset) {
    std::vector<uint8_t> bad = good;
    bad[offset] ^= 0x40;
    return bad;
  };

  CHECK(thrown_code([&] { CheckpointImage::deserialize(flipped(0)); }) == Errc::BadMagic);
  CHECK(thrown_code([&] { CheckpointImage::deserialize(flipped(4)); }) == Errc::BadVersion);
  // Everything behind the header is guarded by the whole-file trailer, the
  // trailer bytes themselves included.
  CHECK(thrown_code([&] { CheckpointImage::deserialize(flipped(8)); }) == Errc::ChecksumMismatch);
  CHECK(thrown_code([&] { CheckpointImage::deserialize(flipped(good.size() / 2)); }) ==
        Errc::ChecksumMismatch);
  CHECK(thrown_code([&] { CheckpointImage::deserialize(flipped(good.size() - 1)); }) ==
        Errc::ChecksumMismatch);

  CHECK(thrown_code([&] { CheckpointImage::deserialize({'O', 'G', 'L'}); }) == Errc::ImageCorrupt);
  std::vector<uint8_t> truncated(good.begin(), good.begin() + good.size() / 2);
  Errc code = thrown_code([&] { CheckpointImage::deserialize(truncated); });
  CHECK((code == Errc::ImageCorrupt || code == Errc::ChecksumMismatch));
}

TEST_CASE("every single-byte corruption of an image is detected") {
  CheckpointImage img = random_image(11);
  const std::vector<uint8_t> good = img.serialize();
  std::mt19937 rng(999);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<uint8_t> bad = good;
    size_t offset = rng() % bad.size();
    uint8_t flip = static_cast<uint8_t>(1 + rng() % 255);
    bad[offset] ^= flip;
    CAPTURE(trial);
    CAPTURE(offset);
    Errc code = thrown_code([&] { CheckpointImage::deserialize(bad); });
    CHECK((code == Errc::BadMagic || code == Errc::BadVersion ||
           code == Errc::ChecksumMismatch));
  }
}

TEST_CASE("image deserialization validates structure behind a valid checksum") {
  CheckpointImage img = random_image(3);
  const std::vector<uint8_t> good = img.serialize();

  // Unknown section id in the first table entry (offset 16 = table start).
  std::vector<uint8_t> bad_section = good;
  bad_section[16] = 0x77;
  CHECK(thrown_code([&] { CheckpointImage::deserialize(refix_trailer(bad_section)); }) ==
        Errc::ImageCorrupt);

  // Section length pointing past the image.
  std::vector<uint8_t> bad_extent = good;
  bad_extent[16 + 2 + 8 + 7] = 0x7f;  // high byte of the first entry's length
  CHECK(thrown_code([&] { CheckpointImage::deserialize(refix_trailer(bad_extent)); }) ==
        Errc::ImageCorrupt);

  // A presented-hash flag must be 0 or 1.
  CheckpointImage windowed;
  display::WindowMeta meta;
  meta.id = 1;
  meta.width = 32;
  meta.height = 32;
  meta.title = "zz-flag-probe";
  windowed.windows.push_back(meta);
  windowed.vids.install(IdSpace::Window, 1, 500);
  std::vector<uint8_t> flagged = windowed.serialize();
  auto title_at = std::search(flagged.begin(), flagged.end(), meta.title.begin(), meta.title.end());
  REQUIRE(title_at != flagged.end());
  flagged[(title_at - flagged.begin()) + meta.title.size()] = 7;
  CHECK(thrown_code([&] { CheckpointImage::deserialize(refix_trailer(flagged)); }) ==
        Errc::ImageCorrupt);

  // Damage inside the embedded log is caught by the log's own trailer even
  // when the outer trailer is made to agree.
  CheckpointImage logged;
  logged.log = recorded_log(5, 20);
  std::vector<uint8_t> log_bytes = logged.log.serialize();
  std::vector<uint8_t> outer = logged.serialize();
  auto log_at = std::search(outer.begin(), outer.end(), log_bytes.begin(), log_bytes.end());
  REQUIRE(log_at != outer.end());
  outer[(log_at - outer.begin()) + log_bytes.size() / 2] ^= 0x10;
  CHECK(thrown_code([&] { CheckpointImage::deserialize(refix_trailer(outer)); }) ==
        Errc::ImageCorrupt);
}

TEST_CASE("a started session is live with a split address space") {
  Session s = Session::start({.driver_seed = 7});
  CHECK(s.live());
  CHECK(s.epoch() == 0);
  CHECK(s.display().connected());
  CHECK(s.display().window_count() == 0);

  auto uppers = s.address_space().regions_with_tag(RegionTag::Upper);
  auto lowers = s.address_space().regions_with_tag(RegionTag::Lower);
  REQUIRE(uppers.size() == 1);
  CHECK(uppers[0].label == "app/stack");
  CHECK(lowers.size() == 2);
  CHECK(s.address_space().has_label("sys/minigl"));
  CHECK(s.address_space().has_label("sys/display"));
  CHECK(s.address_space().threads().size() == 1);
  CHECK(s.address_space().threads().at(session::kMainThread).has_value());

  CHECK(s.create_context() == 1);
  CHECK(s.log().size() == 1);
  CHECK(s.combined_framebuffer_hash() == s.framebuffer_hash(1));

  CHECK(thrown_code([] { Session::start({.display_name = "refuse:down"}); }) ==
        Errc::DisplayUnavailable);
}

TEST_CASE("session regions and threads reject duplicates") {
  Session s = Session::start();
  s.tag_upper_region("app/assets", {1, 2});
  CHECK(thrown_code([&] { s.tag_upper_region("app/assets", {3}); }) == Errc::DuplicateLabel);
  CHECK(thrown_code([&] { s.tag_upper_region("sys/minigl", {3}); }) == Errc::DuplicateLabel);

  s.register_upper_thread(2);
  CHECK(thrown_code([&] { s.register_upper_thread(2); }) == Errc::AlreadyPaired);
  CHECK(thrown_code([&] { s.register_upper_thread(session::kMainThread); }) ==
        Errc::AlreadyPaired);
  auto threads = s.address_space().threads();
  CHECK(threads.size() == 2);
  CHECK(threads.at(2).has_value());
  CHECK(threads.at(session::kMainThread) != threads.at(2));
}

TEST_CASE("checkpoint carries the upper half only and freezes the session") {
  Session s = Session::start({.driver_seed = 3});
  s.tag_upper_region("app/assets", {9, 9, 9});
  s.register_upper_thread(4);
  Scene scene = paint_scene(s);
  size_t logged_calls = s.log().size();

  CheckpointImage image = s.checkpoint(/*prune_log=*/false);
  CHECK_FALSE(s.live());

  REQUIRE(image.upper_regions.size() == 2);
  CHECK(image.upper_regions[0].label == "app/stack");
  CHECK(image.upper_regions[1].label == "app/assets");
  for (const ImageRegion& region : image.upper_regions) {
    CHECK(region.label.rfind("sys/", 0) == std::string::npos);
  }
  CHECK(image.log.size() == logged_calls);
  CHECK(image.epoch == 0);
  CHECK(image.threads == std::vector<UpperThreadId>{session::kMainThread, 4});
  REQUIRE(image.windows.size() == 1);
  CHECK(image.windows[0].id == scene.win);
  CHECK(image.windows[0].width == 64);
  CHECK(image.windows[0].title == "scene");
  CHECK(image.windows[0].last_presented_hash.has_value());

  // The model dropped the whole lower half with the image cut.
  CHECK(s.address_space().regions_with_tag(RegionTag::Lower).empty());
  CHECK(s.address_space().regions_with_tag(RegionTag::Upper).size() == 2);
  CHECK_FALSE(s.address_space().threads().at(session::kMainThread).has_value());

  // Frozen means every entry point gates out.
  CHECK(thrown_code([&] { s.create_context(); }) == Errc::SessionNotLive);
  CHECK(thrown_code([&] { s.clear(scene.ctx); }) == Errc::SessionNotLive);
  CHECK(thrown_code([&] { s.read_framebuffer(scene.ctx); }) == Errc::SessionNotLive);
  CHECK(thrown_code([&] { s.present(scene.win, scene.ctx); }) == Errc::SessionNotLive);
  CHECK(thrown_code([&] { s.checkpoint(); }) == Errc::SessionNotLive);
  CHECK(thrown_code([&] { s.display(); }) == Errc::SessionNotLive);
}

TEST_CASE("checkpoint of a never-drawn session serializes an empty log") {
  Session s = Session::start();
  CheckpointImage image = s.checkpoint();
  CHECK(image.log.serialize() == logstore::CallLog{}.serialize());
  CHECK(image.windows.empty());

  Session back = Session::restore(image, 42);
  CHECK(back.live());
  CHECK(back.combined_framebuffer_hash() == kFnvOffsetBasis);
  CHECK(back.vids().size(IdSpace::Context) == 0);
  CHECK(back.create_context() == 1);
}

TEST_CASE("restore rebuilds pixels state and handles across seeds") {
  Session s = Session::start({.driver_seed = 0});
  s.tag_upper_region("app/assets", {42, 43, 44});
  Scene scene = paint_scene(s);

  uint64_t pre_hash = s.combined_framebuffer_hash();
  std::vector<uint8_t> pre_fb = s.read_framebuffer(scene.ctx);
  uint32_t pre_real_buf = s.vids().resolve(IdSpace::Buffer, scene.buf);
  CheckpointImage image = s.checkpoint();

  // Full wire cycle, as a real restart would see it.
  CheckpointImage loaded = CheckpointImage::deserialize(image.serialize());
  Session r = Session::restore(loaded, /*new_seed=*/12345);

  CHECK(r.live());
  CHECK(r.epoch() == 1);
  CHECK(r.log().epoch() == 1);
  CHECK(r.combined_framebuffer_hash() == pre_hash);
  CHECK(r.read_framebuffer(scene.ctx) == pre_fb);

  // Same virtuals, same counters; the reals underneath moved.
  for (size_t i = 0; i < interpose::kIdSpaceCount; ++i) {
    IdSpace space = static_cast<IdSpace>(i);
    CHECK(r.vids().virtuals(space) == image.vids.virtuals(space));
    CHECK(r.vids().next_virtual(space) == image.vids.next_virtual(space));
  }
  CHECK(r.vids().resolve(IdSpace::Buffer, scene.buf) != pre_real_buf);

  // Upper memory is byte-identical; the lower half is fresh.
  auto uppers = r.address_space().regions_with_tag(RegionTag::Upper);
  REQUIRE(uppers.size() == 2);
  CHECK(uppers[0].label == "app/stack");
  CHECK(uppers[1].label == "app/assets");
  CHECK(uppers[1].bytes == std::vector<uint8_t>{42, 43, 44});
  CHECK(r.address_space().regions_with_tag(RegionTag::Lower).size() == 2);

  // Window came back under its old virtual id and is presentable right away.
  CHECK(r.display().window_count() == 1);
  CHECK_FALSE(r.display().window(r.vids().resolve(IdSpace::Window, scene.win))
                  .last_presented_hash.has_value());
  r.present(scene.win, scene.ctx);

  // Threads re-paired.
  CHECK(r.address_space().threads().size() == 1);
  CHECK(r.address_space().threads().at(session::kMainThread).has_value());
}

TEST_CASE("a restored session continues as if the crash never happened") {
  // Uninterrupted reference run.
  Session ref = Session::start({.driver_seed = 5});
  Scene ref_scene = paint_scene(ref);
  continue_scene(ref, ref_scene);
  uint64_t want = ref.combined_framebuffer_hash();

  // Interrupted run: checkpoint, discard the session, restore elsewhere.
  uint64_t got = 0;
  {
    Session s = Session::start({.driver_seed = 5});
    Scene scene = paint_scene(s);
    CheckpointImage image = s.checkpoint();
    // s is frozen and dropped here; only the image bytes survive.
    std::vector<uint8_t> bytes = image.serialize();

    Session r = Session::restore(CheckpointImage::deserialize(bytes), /*new_seed=*/777);
    continue_scene(r, scene);
    got = r.combined_framebuffer_hash();
  }
  CHECK(got == want);
}

TEST_CASE("virtual ids are never reissued across a restore") {
  Session s = Session::start();
  uint32_t ctx = s.create_context();
  uint32_t b1 = s.gen_resource(ctx, ResourceKind::Buffer);
  uint32_t b2 = s.gen_resource(ctx, ResourceKind::Buffer);
  uint32_t b3 = s.gen_resource(ctx, ResourceKind::Buffer);
  CHECK(std::vector<uint32_t>{b1, b2, b3} == std::vector<uint32_t>{1, 2, 3});
  s.delete_resource(ctx, ResourceKind::Buffer, b3);

  CheckpointImage image = s.checkpoint();
  Session r = Session::restore(image, 99);

  // b3 is gone and its number must stay gone, even though the image's live
  // set never mentions it.
  CHECK(thrown_code([&] { r.upload_data(ctx, ResourceKind::Buffer, b3, {1}); }) ==
        Errc::StaleVirtualId);
  CHECK(r.gen_resource(ctx, ResourceKind::Buffer) == 4);
  // Surviving handles still work.
  r.upload_data(ctx, ResourceKind::Buffer, b1, {5});
  r.delete_resource(ctx, ResourceKind::Buffer, b2);
}

TEST_CASE("one image restores into independent equal sessions") {
  Session s = Session::start({.driver_seed = 2});
  Scene scene = paint_scene(s);
  CheckpointImage image = s.checkpoint();

  Session a = Session::restore(image, 10);
  Session b = Session::restore(image, 20);
  CHECK(a.combined_framebuffer_hash() == b.combined_framebuffer_hash());

  // Divergence after the split stays contained to the session that moved.
  a.draw_triangle(scene.ctx, {1, 1}, {30, 4}, {6, 28}, {255, 255, 0, 255});
  CHECK(a.combined_framebuffer_hash() != b.combined_framebuffer_hash());
}

TEST_CASE("epochs count restores and ride the image header") {
  Session s = Session::start();
  s.create_context();
  CheckpointImage first = s.checkpoint();
  CHECK(first.epoch == 0);

  Session r1 = Session::restore(first, 1);
  CHECK(r1.epoch() == 1);
  CheckpointImage second = r1.checkpoint();
  CHECK(second.epoch == 1);

  Session r2 = Session::restore(CheckpointImage::deserialize(second.serialize()), 2);
  CHECK(r2.epoch() == 2);
  CHECK(r2.log().epoch() == 2);
}

TEST_CASE("checkpoint can prune the log without changing what restores") {
  Session s = Session::start({.driver_seed = 8});
  uint32_t ctx = s.create_context();
  // Dead lifecycle plus shadowed state: prune fodder.
  uint32_t dead = s.gen_resource(ctx, ResourceKind::Shader);
  s.upload_data(ctx, ResourceKind::Shader, dead, {1, 2, 3});
  s.delete_resource(ctx, ResourceKind::Shader, dead);
  s.set_state(ctx, minigl::StateKey::ClearColor, minigl::ClearColor{1.0f, 0.0f, 0.0f, 1.0f});
  s.set_state(ctx, minigl::StateKey::ClearColor, minigl::ClearColor{0.0f, 0.0f, 1.0f, 1.0f});
  s.clear(ctx);
  uint64_t pre_hash = s.combined_framebuffer_hash();
  size_t full_len = s.log().size();

  logstore::PruneReport report;
  CheckpointImage image = s.checkpoint(/*prune_log=*/true, &report);
  CHECK(report.before_len == full_len);
  CHECK(report.after_len < full_len);
  CHECK(image.log.size() == report.after_len);

  Session r = Session::restore(image, 4);
  CHECK(r.combined_framebuffer_hash() == pre_hash);
  // The pruned-out shader's id is still burned.
  CHECK(r.gen_resource(ctx, ResourceKind::Shader) == dead + 1);
}

TEST_CASE("restore rejects inconsistent or unrestorable images") {
  Session s = Session::start();
  uint32_t ctx = s.create_context();
  uint32_t buf = s.gen_resource(ctx, ResourceKind::Buffer);
  s.upload_data(ctx, ResourceKind::Buffer, buf, {1});
  uint32_t win = s.create_window(64, 64, "w");
  s.present(win, ctx);
  CheckpointImage image = s.checkpoint(/*prune_log=*/false);

  // Display down at restore time.
  CHECK(thrown_code([&] { Session::restore(image, 1, "refuse:x"); }) == Errc::DisplayUnavailable);

  // Window metadata missing for an id the table says is live.
  CheckpointImage no_windows = image;
  no_windows.windows.clear();
  CHECK(thrown_code([&] { Session::restore(no_windows, 1); }) == Errc::ImageCorrupt);

  // A log that references an object whose creation never happened.
  CheckpointImage gutted = image;
  std::vector<interpose::CallRecord> records = gutted.log.records();
  REQUIRE(records.size() >= 2);
  records.erase(records.begin());  // drop create_context, keep its uses
  gutted.log = logstore::CallLog::from_records(std::move(records), gutted.log.epoch());
  CHECK(thrown_code([&] { Session::restore(gutted, 1); }) == Errc::ReplayDivergence);

  // The real thing still restores.
  Session ok = Session::restore(image, 1);
  CHECK(ok.live());
}
