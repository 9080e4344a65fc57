#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "glckpt/common.hpp"
#include "glckpt/displayserver.hpp"
#include "glckpt/interpose.hpp"
#include "glckpt/logstore.hpp"

// The split-process view of a running session. Memory regions are tagged by
// which half owns them: UPPER is the application (saved at checkpoint), LOWER
// is the driver and its system libraries (discarded and relaunched). Threads
// pair an upper identity with the lower-half thread currently serving it; the
// pairing's lower side dies with every checkpoint and is rebuilt on restore.

namespace glckpt::splitproc {

enum class RegionTag : uint8_t { Upper = 1, Lower = 2 };

using UpperThreadId = uint32_t;
using LowerThreadId = uint32_t;

struct Region {
  uint32_t id = 0;  // model-local, not persisted; labels identify regions across images
  RegionTag tag{};
  std::string label;
  std::vector<uint8_t> bytes;

  bool operator==(const Region&) const = default;
};

class AddressSpaceModel {
 public:
  // Labels are unique across both halves and non-empty, as are the bytes.
  uint32_t tag_region(RegionTag tag, std::string label, std::vector<uint8_t> bytes);
  const Region& region(uint32_t id) const;
  const std::map<uint32_t, Region>& regions() const { return regions_; }
  std::vector<Region> regions_with_tag(RegionTag tag) const;
  bool has_label(const std::string& label) const;
  // Checkpoint drops the lower half wholesale. Returns how many regions died.
  size_t drop_regions_with_tag(RegionTag tag);

  void register_thread(UpperThreadId upper);
  void pair_thread(UpperThreadId upper, LowerThreadId lower);
  void clear_lower_pairings();
  const std::map<UpperThreadId, std::optional<LowerThreadId>>& threads() const {
    return threads_;
  }

 private:
  uint32_t next_region_id_ = 1;
  std::map<uint32_t, Region> regions_;
  std::map<UpperThreadId, std::optional<LowerThreadId>> threads_;
};

// A region as stored in an image: upper-half by construction, identified by
// its label. Model-local ids do not travel.
struct ImageRegion {
  std::string label;
  std::vector<uint8_t> bytes;

  bool operator==(const ImageRegion&) const = default;
};

// Everything a relaunched process needs: the upper half's memory, the call log
// to rebuild the driver, the id table's expected shape, the windows to
// recreate, and the upper thread ids awaiting new lower partners.
//
// Wire format "OGLC": magic, version, epoch, a five-entry section table
// (REGIONS, CALLLOG, VIDTABLE, WINDOWS, THREADS), the section payloads, and an
// fnv1a64 trailer over every preceding byte of the file.
struct CheckpointImage {
  uint32_t epoch = 0;
  std::vector<ImageRegion> upper_regions;
  logstore::CallLog log;
  interpose::VirtualIdTable vids;
  std::vector<display::WindowMeta> windows;  // ids are virtual window ids
  std::vector<UpperThreadId> threads;        // ascending

  std::vector<uint8_t> serialize() const;
  static CheckpointImage deserialize(const std::vector<uint8_t>& bytes);

  bool operator==(const CheckpointImage&) const = default;
};

}  // namespace glckpt::splitproc
