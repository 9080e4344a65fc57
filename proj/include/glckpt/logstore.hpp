#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "glckpt/common.hpp"
#include "glckpt/interpose.hpp"
#include "glckpt/minigl.hpp"

// Durable home of the intercepted call stream. A log plus a driver seed is a
// complete recipe for rebuilding driver state: replay walks the records against
// a fresh driver and re-establishes every virtual id at its original number,
// mapped to whatever real id the new driver hands out. Pruning shrinks a log
// before it is baked into a checkpoint image, preserving final state only.

namespace glckpt::logstore {

class CallLog : public interpose::LogSink {
 public:
  CallLog() = default;
  explicit CallLog(uint32_t epoch) : epoch_(epoch) {}

  // Accepts only the exact next sequence number. A fresh recording is gap-free
  // from 1; a pruned log keeps its surviving numbers and continues past the
  // highest one.
  uint64_t next_seq() const override {
    return records_.empty() ? 1 : records_.back().seq + 1;
  }
  void append(interpose::CallRecord&& rec) override;

  // Adopts pre-existing records (deserialization, pruning). Sequence numbers
  // must be strictly increasing but may have gaps.
  static CallLog from_records(std::vector<interpose::CallRecord> records, uint32_t epoch);

  const std::vector<interpose::CallRecord>& records() const { return records_; }
  size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  uint32_t epoch() const { return epoch_; }
  void set_epoch(uint32_t epoch) { epoch_ = epoch; }

  // Wire format "OGLL": magic, version, record count, records, then an fnv1a64
  // trailer over the records region. The epoch intentionally does not travel
  // here; it lives in the checkpoint image header.
  std::vector<uint8_t> serialize() const;
  static CallLog deserialize(const std::vector<uint8_t>& bytes);

  bool operator==(const CallLog& other) const {
    return records_ == other.records_ && epoch_ == other.epoch_;
  }

 private:
  std::vector<interpose::CallRecord> records_;
  uint32_t epoch_ = 0;
};

// Re-executes a log against a fresh driver, installing every created object's
// original virtual id in `vids`. Fault records are skipped: they changed
// nothing when recorded. Any error while re-executing a successful record
// (stale id, driver rejection, undecodable arguments) means the log and the
// driver disagree, which surfaces as ReplayDivergence.
void replay(const CallLog& log, minigl::Driver& driver, interpose::VirtualIdTable& vids);

struct PruneReport {
  // Records removed, per rule. The pair counter includes the dead lifecycle's
  // create, destroy, and touching uploads, so the lengths reconcile exactly:
  // after_len = before_len - (sum of the three).
  uint64_t removed_create_destroy_pairs = 0;
  uint64_t removed_shadowed_state_sets = 0;
  uint64_t removed_predraw_calls = 0;
  uint64_t before_len = 0;
  uint64_t after_len = 0;
};

// Final-state-preserving log reduction, iterated to a fixed point:
//   R1  create..destroy lifecycles whose only other references are uploads
//       disappear whole;
//   R2  a state set shadowed by a later set of the same key, with no observer
//       of that key in between (Clear observes the clear color, Draw observes
//       the viewport), disappears;
//   R3  draws and clears strictly before a context's last full-framebuffer
//       clear disappear, since that clear repaints every pixel.
// Fault records are invisible to the analysis and always survive. The
// framebuffer size tells R3 what "full" means.
std::pair<CallLog, PruneReport> prune(const CallLog& log, minigl::FbSize fb = {});

// What an application holding virtual ids can observe of one context:
// resources with payloads, bindings, state slots, and the framebuffer hash.
// Two sessions are equivalent exactly when their views compare equal.
struct VirtualContextView {
  std::array<std::vector<std::pair<uint32_t, std::vector<uint8_t>>>, minigl::kKindCount>
      resources;  // (virtual id, payload), ascending
  std::array<uint32_t, minigl::kKindCount> bound{};
  minigl::ClearColor clear_color;
  minigl::ViewportRect viewport;
  uint64_t fb_hash = 0;

  bool operator==(const VirtualContextView&) const = default;
};

struct VirtualView {
  std::vector<std::pair<uint32_t, VirtualContextView>> contexts;  // by virtual ctx id

  bool operator==(const VirtualView&) const = default;
};

VirtualView virtual_view(const minigl::Driver& driver, const interpose::VirtualIdTable& vids);

}  // namespace glckpt::logstore
