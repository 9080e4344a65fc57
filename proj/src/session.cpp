#include "glckpt/session.hpp"

#include <algorithm>
#include <utility>

namespace glckpt::session {

namespace {

using display::DisplayConnection;
using interpose::IdSpace;
using interpose::Interceptor;
using splitproc::RegionTag;

constexpr const char* kStackRegionLabel = "app/stack";
constexpr const char* kDriverRegionLabel = "sys/minigl";
constexpr const char* kDisplayRegionLabel = "sys/display";

// The id spaces the driver owns, i.e. everything the log replay rebuilds.
// Windows are rebuilt from metadata instead.
constexpr IdSpace kDriverSpaces[] = {IdSpace::Context, IdSpace::Shader, IdSpace::Program,
                                     IdSpace::Buffer, IdSpace::Texture};

std::vector<uint8_t> default_stack_bytes() {
  std::vector<uint8_t> bytes(64);
  for (size_t i = 0; i < bytes.size(); ++i) bytes[i] = static_cast<uint8_t>(i);
  return bytes;
}

}  // namespace

void Session::require_live() const {
  if (!live_) throw Error(Errc::SessionNotLive, "session is frozen or was never started");
}

void Session::tag_lower_regions() {
  wire::ByteWriter driver_bytes;
  driver_bytes.u64(config_.driver_seed);
  space_.tag_region(RegionTag::Lower, kDriverRegionLabel, driver_bytes.take());
  space_.tag_region(RegionTag::Lower, kDisplayRegionLabel, {1});
}

Session Session::start(SessionConfig config) {
  Session s;
  s.config_ = std::move(config);
  s.driver_ = std::make_unique<minigl::Driver>(s.config_.driver_seed, s.config_.fb_size);
  s.display_.emplace(DisplayConnection::connect(s.config_.display_name));
  s.space_.tag_region(RegionTag::Upper, kStackRegionLabel, default_stack_bytes());
  s.tag_lower_regions();
  s.space_.pair_thread(kMainThread, s.next_lower_thread_++);
  s.live_ = true;
  return s;
}

uint32_t Session::create_context(uint32_t thread) {
  require_live();
  Interceptor intercept(*driver_, vids_, log_);
  return intercept.create_context(thread);
}

uint32_t Session::gen_resource(uint32_t vctx, minigl::ResourceKind kind, uint32_t thread) {
  require_live();
  Interceptor intercept(*driver_, vids_, log_);
  return intercept.gen_resource(thread, vctx, kind);
}

void Session::delete_resource(uint32_t vctx, minigl::ResourceKind kind, uint32_t virt,
                              uint32_t thread) {
  require_live();
  Interceptor intercept(*driver_, vids_, log_);
  intercept.delete_resource(thread, vctx, kind, virt);
}

void Session::upload_data(uint32_t vctx, minigl::ResourceKind kind, uint32_t virt,
                          std::vector<uint8_t> bytes, uint32_t thread) {
  require_live();
  Interceptor intercept(*driver_, vids_, log_);
  intercept.upload_data(thread, vctx, kind, virt, std::move(bytes));
}

void Session::set_state(uint32_t vctx, minigl::StateKey key, const minigl::StateValue& value,
                        uint32_t thread) {
  require_live();
  Interceptor intercept(*driver_, vids_, log_);
  intercept.set_state(thread, vctx, key, value);
}

void Session::bind(uint32_t vctx, minigl::ResourceKind kind, uint32_t virt, uint32_t thread) {
  require_live();
  Interceptor intercept(*driver_, vids_, log_);
  intercept.bind(thread, vctx, kind, virt);
}

void Session::clear(uint32_t vctx, uint32_t thread) {
  require_live();
  Interceptor intercept(*driver_, vids_, log_);
  intercept.clear(thread, vctx);
}

void Session::draw_triangle(uint32_t vctx, minigl::Vec2i v0, minigl::Vec2i v1, minigl::Vec2i v2,
                            minigl::Color4b color, uint32_t thread) {
  require_live();
  Interceptor intercept(*driver_, vids_, log_);
  intercept.draw_triangle(thread, vctx, v0, v1, v2, color);
}

std::vector<uint8_t> Session::read_framebuffer(uint32_t vctx) const {
  require_live();
  return driver_->read_framebuffer(vids_.resolve(IdSpace::Context, vctx));
}

uint64_t Session::framebuffer_hash(uint32_t vctx) const {
  require_live();
  return driver_->framebuffer_hash(vids_.resolve(IdSpace::Context, vctx));
}

uint64_t Session::combined_framebuffer_hash() const {
  require_live();
  uint64_t hash = kFnvOffsetBasis;
  for (const auto& [virt, real] : vids_.entries(IdSpace::Context)) {
    const std::vector<uint8_t> fb = driver_->read_framebuffer(real);
    hash = fnv1a64(fb.data(), fb.size(), hash);
  }
  return hash;
}

uint32_t Session::create_window(int32_t width, int32_t height, const std::string& title) {
  require_live();
  display::WindowId real = display_->create_window(width, height, title);
  return vids_.allocate(IdSpace::Window, real);
}

void Session::present(uint32_t vwin, uint32_t vctx) {
  require_live();
  uint32_t rwin = vids_.resolve(IdSpace::Window, vwin);
  uint32_t rctx = vids_.resolve(IdSpace::Context, vctx);
  display_->present(rwin, driver_->read_framebuffer(rctx), config_.fb_size.w, config_.fb_size.h);
}

uint32_t Session::tag_upper_region(std::string label, std::vector<uint8_t> bytes) {
  require_live();
  return space_.tag_region(RegionTag::Upper, std::move(label), std::move(bytes));
}

void Session::register_upper_thread(uint32_t upper) {
  require_live();
  space_.pair_thread(upper, next_lower_thread_++);
}

splitproc::CheckpointImage Session::checkpoint(bool prune_log,
                                               logstore::PruneReport* prune_report) {
  require_live();

  // Shut the display down first; its metadata is part of the image. Window
  // ids travel in virtual form, the only form that means anything later.
  std::vector<display::WindowMeta> metas = display_->disconnect_for_checkpoint();
  for (display::WindowMeta& meta : metas) {
    meta.id = vids_.reverse(IdSpace::Window, meta.id);
  }
  std::sort(metas.begin(), metas.end(),
            [](const display::WindowMeta& a, const display::WindowMeta& b) { return a.id < b.id; });

  splitproc::CheckpointImage image;
  image.epoch = epoch_;
  for (const splitproc::Region& region : space_.regions_with_tag(RegionTag::Upper)) {
    image.upper_regions.push_back({region.label, region.bytes});
  }
  if (prune_log) {
    auto [pruned, report] = logstore::prune(log_, config_.fb_size);
    image.log = std::move(pruned);
    if (prune_report != nullptr) *prune_report = report;
  } else {
    image.log = log_;
    if (prune_report != nullptr) {
      *prune_report = {};
      prune_report->before_len = log_.size();
      prune_report->after_len = log_.size();
    }
  }
  image.vids = vids_;
  image.windows = std::move(metas);
  for (const auto& [upper, lower] : space_.threads()) image.threads.push_back(upper);

  // Everything below the split line dies with the checkpoint.
  space_.drop_regions_with_tag(RegionTag::Lower);
  space_.clear_lower_pairings();
  driver_.reset();
  display_.reset();
  live_ = false;
  return image;
}

Session Session::restore(const splitproc::CheckpointImage& image, uint64_t new_seed,
                         const std::string& display_name, minigl::FbSize fb) {
  Session s;
  s.config_.driver_seed = new_seed;
  s.config_.fb_size = fb;
  s.config_.display_name = display_name;
  s.epoch_ = image.epoch + 1;

  // 1. Trivial lower half: a fresh driver that knows nothing yet.
  s.driver_ = std::make_unique<minigl::Driver>(new_seed, fb);
  s.space_.tag_region(RegionTag::Lower, kDriverRegionLabel, [&] {
    wire::ByteWriter w;
    w.u64(new_seed);
    return w.take();
  }());

  // 2. Upper memory, byte-identical.
  for (const splitproc::ImageRegion& region : image.upper_regions) {
    s.space_.tag_region(RegionTag::Upper, region.label, region.bytes);
  }

  // 3. Display: reconnect and recreate the windows. The metadata ids are
  // virtual, so the returned translation maps virtual -> fresh real.
  auto [conn, virt_to_real] = DisplayConnection::reconnect_from_metadata(display_name,
                                                                         image.windows);
  s.display_.emplace(std::move(conn));
  s.space_.tag_region(RegionTag::Lower, kDisplayRegionLabel, {1});

  // 4 + 5. Rebuild the id table by replaying the log: every create installs
  // its original virtual id against whatever real id the fresh driver hands
  // out. The image's table then serves as the authority on what the live set
  // must look like and where each space's virtual counter stood.
  logstore::replay(image.log, *s.driver_, s.vids_);
  for (IdSpace space : kDriverSpaces) {
    if (s.vids_.virtuals(space) != image.vids.virtuals(space)) {
      throw Error(Errc::ReplayDivergence,
                  std::string("replayed id table disagrees with image in space ") +
                      interpose::space_name(space));
    }
    s.vids_.set_next_virtual(space, image.vids.next_virtual(space));
  }

  std::vector<uint32_t> window_virtuals;
  for (const display::WindowMeta& meta : image.windows) window_virtuals.push_back(meta.id);
  if (window_virtuals != image.vids.virtuals(IdSpace::Window)) {
    throw Error(Errc::ImageCorrupt, "window metadata disagrees with the image's id table");
  }
  for (const display::WindowMeta& meta : image.windows) {
    s.vids_.install(IdSpace::Window, meta.id, virt_to_real.at(meta.id));
  }
  s.vids_.set_next_virtual(IdSpace::Window, image.vids.next_virtual(IdSpace::Window));

  // 6. Pair every saved upper thread with a fresh lower-half slot.
  for (splitproc::UpperThreadId upper : image.threads) {
    s.space_.pair_thread(upper, s.next_lower_thread_++);
  }

  s.log_ = image.log;
  s.log_.set_epoch(s.epoch_);
  s.live_ = true;
  return s;
}

const display::DisplayConnection& Session::display() const {
  require_live();
  return *display_;
}

const minigl::Driver& Session::driver() const {
  require_live();
  return *driver_;
}

}  // namespace glckpt::session
