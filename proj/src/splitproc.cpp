#include "glckpt/splitproc.hpp"

#include <array>
#include <string>

#include "glckpt/wire.hpp"

namespace glckpt::splitproc {

uint32_t AddressSpaceModel::tag_region(RegionTag tag, std::string label,
                                       std::vector<uint8_t> bytes) {
  if (label.empty() || label.size() > 65535) {
    throw Error(Errc::BadValue, "region label must be 1..65535 bytes");
  }
  if (bytes.empty()) throw Error(Errc::BadValue, "region bytes must be non-empty");
  if (has_label(label)) throw Error(Errc::DuplicateLabel, label);
  uint32_t id = next_region_id_++;
  regions_.emplace(id, Region{id, tag, std::move(label), std::move(bytes)});
  return id;
}

const Region& AddressSpaceModel::region(uint32_t id) const {
  auto it = regions_.find(id);
  if (it == regions_.end()) throw Error(Errc::UnknownId, "region " + std::to_string(id));
  return it->second;
}

std::vector<Region> AddressSpaceModel::regions_with_tag(RegionTag tag) const {
  std::vector<Region> out;
  for (const auto& [id, region] : regions_) {
    if (region.tag == tag) out.push_back(region);
  }
  return out;
}

bool AddressSpaceModel::has_label(const std::string& label) const {
  for (const auto& [id, region] : regions_) {
    if (region.label == label) return true;
  }
  return false;
}

size_t AddressSpaceModel::drop_regions_with_tag(RegionTag tag) {
  size_t dropped = 0;
  for (auto it = regions_.begin(); it != regions_.end();) {
    if (it->second.tag == tag) {
      it = regions_.erase(it);
      ++dropped;
    } else {
      ++it;
    }
  }
  return dropped;
}

void AddressSpaceModel::register_thread(UpperThreadId upper) {
  if (threads_.count(upper)) {
    throw Error(Errc::AlreadyPaired, "upper thread " + std::to_string(upper));
  }
  threads_.emplace(upper, std::nullopt);
}

void AddressSpaceModel::pair_thread(UpperThreadId upper, LowerThreadId lower) {
  auto it = threads_.find(upper);
  if (it == threads_.end()) {
    threads_.emplace(upper, lower);
    return;
  }
  if (it->second.has_value()) {
    throw Error(Errc::AlreadyPaired, "upper thread " + std::to_string(upper) +
                                         " already serves lower " +
                                         std::to_string(*it->second));
  }
  it->second = lower;
}

void AddressSpaceModel::clear_lower_pairings() {
  for (auto& [upper, lower] : threads_) lower.reset();
}

namespace {

constexpr uint32_t kVersion = 1;
constexpr size_t kSectionCount = 5;
constexpr uint16_t kSectionRegions = 1;
constexpr uint16_t kSectionCallLog = 2;
constexpr uint16_t kSectionVidTable = 3;
constexpr uint16_t kSectionWindows = 4;
constexpr uint16_t kSectionThreads = 5;
// magic + version + epoch + section count, then the table entries.
constexpr size_t kTableStart = 4 + 4 + 4 + 4;
constexpr size_t kEntryLen = 2 + 8 + 8;

}  // namespace

std::vector<uint8_t> CheckpointImage::serialize() const {
  wire::ByteWriter w;
  w.literal("OGLC");
  w.u32(kVersion);
  w.u32(epoch);
  w.u32(kSectionCount);
  for (uint16_t id = 1; id <= kSectionCount; ++id) {
    w.u16(id);
    w.u64(0);  // offset, patched once the payload lands
    w.u64(0);  // length, same
  }

  std::array<std::pair<uint64_t, uint64_t>, kSectionCount> extents;
  auto with_section = [&](uint16_t id, auto&& body) {
    uint64_t start = w.size();
    body();
    extents[id - 1] = {start, w.size() - start};
  };

  with_section(kSectionRegions, [&] {
    w.u32(static_cast<uint32_t>(upper_regions.size()));
    for (const ImageRegion& region : upper_regions) {
      w.u16(static_cast<uint16_t>(region.label.size()));
      w.str(region.label);
      w.u64(region.bytes.size());
      w.bytes(region.bytes);
    }
  });
  with_section(kSectionCallLog, [&] { w.bytes(log.serialize()); });
  with_section(kSectionVidTable, [&] { vids.serialize(w); });
  with_section(kSectionWindows, [&] {
    w.u32(static_cast<uint32_t>(windows.size()));
    for (const display::WindowMeta& win : windows) {
      w.u32(win.id);
      w.i32(win.width);
      w.i32(win.height);
      w.u16(static_cast<uint16_t>(win.title.size()));
      w.str(win.title);
      w.u8(win.last_presented_hash.has_value() ? 1 : 0);
      if (win.last_presented_hash) w.u64(*win.last_presented_hash);
    }
  });
  with_section(kSectionThreads, [&] {
    w.u32(static_cast<uint32_t>(threads.size()));
    for (UpperThreadId t : threads) w.u32(t);
  });

  for (size_t i = 0; i < kSectionCount; ++i) {
    w.patch_u64(kTableStart + i * kEntryLen + 2, extents[i].first);
    w.patch_u64(kTableStart + i * kEntryLen + 10, extents[i].second);
  }
  w.u64(fnv1a64(w.data()));
  return w.take();
}

CheckpointImage CheckpointImage::deserialize(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < 8) throw Error(Errc::ImageCorrupt, "shorter than any header");
  if (std::string(bytes.begin(), bytes.begin() + 4) != "OGLC") {
    throw Error(Errc::BadMagic, "not a checkpoint image");
  }
  wire::ByteReader header(bytes, Errc::ImageCorrupt);
  header.seek(4);
  uint32_t version = header.u32();
  if (version != kVersion) {
    throw Error(Errc::BadVersion, "image version " + std::to_string(version));
  }

  // Whole-file trailer check up front: after this, any parse failure means the
  // image was built wrong, not flipped in transit.
  if (bytes.size() < kTableStart + kSectionCount * kEntryLen + 8) {
    throw Error(Errc::ImageCorrupt, "shorter than its fixed layout");
  }
  size_t body_len = bytes.size() - 8;
  wire::ByteReader trailer(bytes.data() + body_len, 8, Errc::ImageCorrupt);
  if (trailer.u64() != fnv1a64(bytes.data(), body_len)) {
    throw Error(Errc::ChecksumMismatch, "image does not match its trailer");
  }

  CheckpointImage img;
  img.epoch = header.u32();
  if (header.u32() != kSectionCount) {
    throw Error(Errc::ImageCorrupt, "unexpected section count");
  }
  std::array<std::pair<uint64_t, uint64_t>, kSectionCount> extents;
  std::array<bool, kSectionCount> seen{};
  for (size_t i = 0; i < kSectionCount; ++i) {
    uint16_t id = header.u16();
    uint64_t off = header.u64();
    uint64_t len = header.u64();
    if (id < 1 || id > kSectionCount || seen[id - 1]) {
      throw Error(Errc::ImageCorrupt, "bad section table entry");
    }
    if (off > body_len || len > body_len - off) {
      throw Error(Errc::ImageCorrupt, "section extends past the image");
    }
    seen[id - 1] = true;
    extents[id - 1] = {off, len};
  }

  auto section = [&](uint16_t id) {
    auto [off, len] = extents[id - 1];
    return wire::ByteReader(bytes.data() + off, len, Errc::ImageCorrupt);
  };

  {
    wire::ByteReader r = section(kSectionRegions);
    uint32_t count = r.u32();
    for (uint32_t i = 0; i < count; ++i) {
      ImageRegion region;
      region.label = r.str(r.u16());
      uint64_t data_len = r.u64();
      region.bytes = r.bytes(data_len);
      if (region.label.empty() || region.bytes.empty()) {
        throw Error(Errc::ImageCorrupt, "region must have a label and bytes");
      }
      for (const ImageRegion& prev : img.upper_regions) {
        if (prev.label == region.label) {
          throw Error(Errc::ImageCorrupt, "duplicate region label " + region.label);
        }
      }
      img.upper_regions.push_back(std::move(region));
    }
    if (!r.done()) throw Error(Errc::ImageCorrupt, "trailing bytes in regions section");
  }

  {
    wire::ByteReader r = section(kSectionCallLog);
    try {
      img.log = logstore::CallLog::deserialize(r.bytes(r.remaining()));
    } catch (const Error& e) {
      throw Error(Errc::ImageCorrupt, std::string("embedded log: ") + e.what());
    }
    img.log.set_epoch(img.epoch);
  }

  {
    wire::ByteReader r = section(kSectionVidTable);
    img.vids = interpose::VirtualIdTable::deserialize(r);
    if (!r.done()) throw Error(Errc::ImageCorrupt, "trailing bytes in id table section");
  }

  {
    wire::ByteReader r = section(kSectionWindows);
    uint32_t count = r.u32();
    uint32_t prev_id = 0;
    for (uint32_t i = 0; i < count; ++i) {
      display::WindowMeta meta;
      meta.id = r.u32();
      meta.width = r.i32();
      meta.height = r.i32();
      meta.title = r.str(r.u16());
      uint8_t has_hash = r.u8();
      if (has_hash > 1) throw Error(Errc::ImageCorrupt, "bad presented-hash flag");
      if (has_hash == 1) meta.last_presented_hash = r.u64();
      if (meta.id == 0 || meta.id <= prev_id || meta.width <= 0 || meta.height <= 0) {
        throw Error(Errc::ImageCorrupt, "malformed window entry");
      }
      prev_id = meta.id;
      img.windows.push_back(std::move(meta));
    }
    if (!r.done()) throw Error(Errc::ImageCorrupt, "trailing bytes in windows section");
  }

  {
    wire::ByteReader r = section(kSectionThreads);
    uint32_t count = r.u32();
    uint32_t prev = 0;
    for (uint32_t i = 0; i < count; ++i) {
      uint32_t t = r.u32();
      if (t == 0 || t <= prev) throw Error(Errc::ImageCorrupt, "thread ids must ascend");
      prev = t;
      img.threads.push_back(t);
    }
    if (!r.done()) throw Error(Errc::ImageCorrupt, "trailing bytes in threads section");
  }

  return img;
}

}  // namespace glckpt::splitproc
