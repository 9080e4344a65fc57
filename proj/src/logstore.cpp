#include "glckpt/logstore.hpp"

#include <algorithm>
#include <map>
#include <string>

#include "glckpt/wire.hpp"

namespace glckpt::logstore {

using interpose::CallClass;
using interpose::CallRecord;
using interpose::IdSpace;
using interpose::Opcode;

namespace {

constexpr char kMagic[4] = {'O', 'G', 'L', 'L'};
constexpr uint32_t kVersion = 1;
constexpr size_t kHeaderLen = 4 + 4 + 8;  // magic, version, record count
constexpr size_t kTrailerLen = 8;

void validate_record(const CallRecord& rec) {
  CallClass cls;
  try {
    cls = interpose::classify(rec.opcode);
  } catch (const Error&) {
    throw Error(Errc::BadValue, "record " + std::to_string(rec.seq) + " has an unknown opcode");
  }
  if (cls != rec.cls) {
    throw Error(Errc::BadValue,
                "record " + std::to_string(rec.seq) + " class does not match its opcode");
  }
  if (cls == CallClass::PureRead) {
    throw Error(Errc::BadValue, "pure reads are never logged");
  }
  if (rec.seq == 0) {
    throw Error(Errc::BadValue, "sequence numbers start at 1");
  }
}

}  // namespace

void CallLog::append(CallRecord&& rec) {
  if (rec.seq != next_seq()) {
    throw Error(Errc::SequenceGap, "got seq " + std::to_string(rec.seq) + ", want " +
                                       std::to_string(next_seq()));
  }
  validate_record(rec);
  records_.push_back(std::move(rec));
}

CallLog CallLog::from_records(std::vector<CallRecord> records, uint32_t epoch) {
  uint64_t prev = 0;
  for (const CallRecord& rec : records) {
    validate_record(rec);
    if (rec.seq <= prev) {
      throw Error(Errc::SequenceGap, "sequence numbers must be strictly increasing");
    }
    prev = rec.seq;
  }
  CallLog log(epoch);
  log.records_ = std::move(records);
  return log;
}

std::vector<uint8_t> CallLog::serialize() const {
  wire::ByteWriter w;
  w.literal("OGLL");
  w.u32(kVersion);
  w.u64(records_.size());
  size_t body_start = w.size();
  for (const CallRecord& rec : records_) {
    w.u64(rec.seq);
    w.u32(rec.thread);
    w.u32(rec.ctx);
    w.u16(static_cast<uint16_t>(rec.opcode));
    w.u8(static_cast<uint8_t>(rec.cls));
    w.u8(rec.fault ? 1 : 0);
    w.u32(static_cast<uint32_t>(rec.args.size()));
    w.bytes(rec.args);
  }
  uint64_t sum = fnv1a64(w.data().data() + body_start, w.size() - body_start);
  w.u64(sum);
  return w.take();
}

CallLog CallLog::deserialize(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < kHeaderLen + kTrailerLen) {
    throw Error(Errc::TruncatedLog, "shorter than header and trailer");
  }

  wire::ByteReader header(bytes, Errc::TruncatedLog);
  if (header.str(4) != std::string(kMagic, 4)) throw Error(Errc::BadMagic, "not a call log");
  uint32_t version = header.u32();
  if (version != kVersion) {
    throw Error(Errc::BadVersion, "log version " + std::to_string(version));
  }
  uint64_t count = header.u64();

  // Verify the trailer before trusting any record bytes. The records region is
  // everything between the fixed header and the fixed-size trailer, so its
  // bounds do not depend on (possibly corrupt) contents.
  size_t body_len = bytes.size() - kHeaderLen - kTrailerLen;
  uint64_t want_sum = fnv1a64(bytes.data() + kHeaderLen, body_len);
  wire::ByteReader trailer(bytes.data() + kHeaderLen + body_len, kTrailerLen, Errc::TruncatedLog);
  if (trailer.u64() != want_sum) {
    throw Error(Errc::ChecksumMismatch, "records region does not match its trailer");
  }

  // The checksum has vouched for the bytes; any parse failure left means the
  // header's record count disagrees with the body.
  wire::ByteReader r(bytes.data() + kHeaderLen, body_len, Errc::TruncatedLog);
  std::vector<CallRecord> records;
  records.reserve(count < 65536 ? count : 65536);
  for (uint64_t i = 0; i < count; ++i) {
    CallRecord rec;
    rec.seq = r.u64();
    rec.thread = r.u32();
    rec.ctx = r.u32();
    rec.opcode = static_cast<Opcode>(r.u16());
    rec.cls = static_cast<CallClass>(r.u8());
    uint8_t fault = r.u8();
    if (fault > 1) throw Error(Errc::TruncatedLog, "fault flag out of range");
    rec.fault = fault == 1;
    uint32_t arg_len = r.u32();
    rec.args = r.bytes(arg_len);
    records.push_back(std::move(rec));
  }
  if (!r.done()) throw Error(Errc::TruncatedLog, "bytes left over after the declared records");

  try {
    return from_records(std::move(records), 0);
  } catch (const Error& e) {
    throw Error(Errc::TruncatedLog, std::string("records malformed: ") + e.what());
  }
}

void replay(const CallLog& log, minigl::Driver& driver, interpose::VirtualIdTable& vids) {
  for (const CallRecord& rec : log.records()) {
    if (rec.fault) continue;  // changed nothing then, changes nothing now
    try {
      switch (rec.opcode) {
        case Opcode::CreateContext: {
          auto a = interpose::decode_create_context(rec.args);
          uint32_t real = driver.create_context();
          vids.install(IdSpace::Context, a.result_virtual, real);
          break;
        }
        case Opcode::GenResource: {
          auto a = interpose::decode_gen_resource(rec.args);
          uint32_t rctx = vids.resolve(IdSpace::Context, rec.ctx);
          uint32_t real = driver.gen_resource(rctx, a.kind);
          vids.install(interpose::space_for_kind(a.kind), a.result_virtual, real);
          break;
        }
        case Opcode::DeleteResource: {
          auto a = interpose::decode_delete_resource(rec.args);
          uint32_t rctx = vids.resolve(IdSpace::Context, rec.ctx);
          IdSpace space = interpose::space_for_kind(a.kind);
          driver.delete_resource(rctx, a.kind, vids.resolve(space, a.virt));
          vids.erase(space, a.virt);
          break;
        }
        case Opcode::UploadData: {
          auto a = interpose::decode_upload_data(rec.args);
          uint32_t rctx = vids.resolve(IdSpace::Context, rec.ctx);
          IdSpace space = interpose::space_for_kind(a.kind);
          driver.upload_data(rctx, a.kind, vids.resolve(space, a.virt), std::move(a.bytes));
          break;
        }
        case Opcode::SetState: {
          auto a = interpose::decode_set_state(rec.args);
          driver.set_state(vids.resolve(IdSpace::Context, rec.ctx), a.key, a.value);
          break;
        }
        case Opcode::Bind: {
          auto a = interpose::decode_bind(rec.args);
          uint32_t rctx = vids.resolve(IdSpace::Context, rec.ctx);
          driver.bind(rctx, a.kind, vids.resolve(interpose::space_for_kind(a.kind), a.virt));
          break;
        }
        case Opcode::Clear:
          driver.clear(vids.resolve(IdSpace::Context, rec.ctx));
          break;
        case Opcode::DrawTriangle: {
          auto a = interpose::decode_draw_triangle(rec.args);
          driver.draw_triangle(vids.resolve(IdSpace::Context, rec.ctx), a.v0, a.v1, a.v2,
                               a.color);
          break;
        }
        case Opcode::ReadFramebuffer:
          throw Error(Errc::ReplayDivergence, "pure read in the log");
      }
    } catch (const Error& e) {
      if (e.code() == Errc::ReplayDivergence) throw;
      throw Error(Errc::ReplayDivergence,
                  "record " + std::to_string(rec.seq) + ": " + e.what());
    }
  }
}

namespace {

// Working state for one prune run: flags parallel to log.records().
struct PruneState {
  const std::vector<CallRecord>* records;
  std::vector<bool> removed;

  bool live(size_t i) const {
    return !removed[i] && !(*records)[i].fault;  // faults are invisible to the analysis
  }
};

// R1: a resource created and destroyed within the log, referenced in between
// only by uploads, never influenced anything. Drop create, uploads, destroy.
uint64_t pass_dead_lifecycles(PruneState& st) {
  struct Life {
    size_t gen = SIZE_MAX;
    size_t del = SIZE_MAX;
    std::vector<size_t> uploads;
    bool blocked = false;
  };
  std::map<std::pair<uint8_t, uint32_t>, Life> lives;  // (kind, virtual) -> events

  const auto& recs = *st.records;
  for (size_t i = 0; i < recs.size(); ++i) {
    if (!st.live(i)) continue;
    switch (recs[i].opcode) {
      case Opcode::GenResource: {
        auto a = interpose::decode_gen_resource(recs[i].args);
        Life& life = lives[{static_cast<uint8_t>(a.kind), a.result_virtual}];
        if (life.gen != SIZE_MAX || life.del != SIZE_MAX || !life.uploads.empty()) {
          life.blocked = true;  // events out of order: leave it alone
        }
        life.gen = i;
        break;
      }
      case Opcode::DeleteResource: {
        auto a = interpose::decode_delete_resource(recs[i].args);
        Life& life = lives[{static_cast<uint8_t>(a.kind), a.virt}];
        if (life.gen == SIZE_MAX || life.del != SIZE_MAX) life.blocked = true;
        life.del = i;
        break;
      }
      case Opcode::UploadData: {
        auto a = interpose::decode_upload_data(recs[i].args);
        Life& life = lives[{static_cast<uint8_t>(a.kind), a.virt}];
        if (life.gen == SIZE_MAX || life.del != SIZE_MAX) life.blocked = true;
        life.uploads.push_back(i);
        break;
      }
      case Opcode::Bind: {
        auto a = interpose::decode_bind(recs[i].args);
        if (a.virt != 0) {
          // Bound at least once: the binding outlives the data, keep it all.
          lives[{static_cast<uint8_t>(a.kind), a.virt}].blocked = true;
        }
        break;
      }
      default:
        break;
    }
  }

  uint64_t removed = 0;
  for (const auto& [key, life] : lives) {
    if (life.blocked || life.gen == SIZE_MAX || life.del == SIZE_MAX) continue;
    st.removed[life.gen] = true;
    st.removed[life.del] = true;
    removed += 2;
    for (size_t u : life.uploads) {
      st.removed[u] = true;
      ++removed;
    }
  }
  return removed;
}

// R2: a state set whose key is set again before anything observes it had no
// effect. Clear observes the clear color; Draw observes the viewport.
uint64_t pass_shadowed_state_sets(PruneState& st) {
  std::map<std::pair<uint32_t, uint8_t>, size_t> pending;  // (ctx, key) -> unobserved set
  uint64_t removed = 0;

  const auto& recs = *st.records;
  for (size_t i = 0; i < recs.size(); ++i) {
    if (!st.live(i)) continue;
    const CallRecord& rec = recs[i];
    switch (rec.opcode) {
      case Opcode::SetState: {
        auto a = interpose::decode_set_state(rec.args);
        auto key = std::pair{rec.ctx, static_cast<uint8_t>(a.key)};
        auto it = pending.find(key);
        if (it != pending.end()) {
          st.removed[it->second] = true;
          ++removed;
        }
        pending[key] = i;
        break;
      }
      case Opcode::Clear:
        pending.erase({rec.ctx, static_cast<uint8_t>(minigl::StateKey::ClearColor)});
        break;
      case Opcode::DrawTriangle:
        pending.erase({rec.ctx, static_cast<uint8_t>(minigl::StateKey::Viewport)});
        break;
      default:
        break;
    }
  }
  // Whatever is still pending is each key's final value: it must survive for
  // whatever runs after a restore.
  return removed;
}

// R3: a clear issued while the viewport covers the whole framebuffer repaints
// every pixel, so earlier draws and clears in that context are invisible.
uint64_t pass_predraw_elimination(PruneState& st, minigl::FbSize fb) {
  std::map<uint32_t, minigl::ViewportRect> viewport;  // tracked per context
  std::map<uint32_t, size_t> last_full_clear;

  auto covers_fb = [&](const minigl::ViewportRect& vp) {
    return vp.x <= 0 && vp.y <= 0 && int64_t(vp.x) + vp.w >= fb.w &&
           int64_t(vp.y) + vp.h >= fb.h;
  };

  const auto& recs = *st.records;
  for (size_t i = 0; i < recs.size(); ++i) {
    if (!st.live(i)) continue;
    const CallRecord& rec = recs[i];
    if (rec.opcode == Opcode::CreateContext) {
      auto a = interpose::decode_create_context(rec.args);
      viewport[a.result_virtual] = {0, 0, fb.w, fb.h};
    } else if (rec.opcode == Opcode::SetState) {
      auto a = interpose::decode_set_state(rec.args);
      if (a.key == minigl::StateKey::Viewport) {
        viewport[rec.ctx] = std::get<minigl::ViewportRect>(a.value);
      }
    } else if (rec.opcode == Opcode::Clear) {
      auto it = viewport.find(rec.ctx);
      bool full = it == viewport.end() ? true : covers_fb(it->second);
      if (full) last_full_clear[rec.ctx] = i;
    }
  }

  uint64_t removed = 0;
  for (size_t i = 0; i < recs.size(); ++i) {
    if (!st.live(i)) continue;
    const CallRecord& rec = recs[i];
    if (rec.opcode != Opcode::Clear && rec.opcode != Opcode::DrawTriangle) continue;
    auto it = last_full_clear.find(rec.ctx);
    if (it != last_full_clear.end() && i < it->second) {
      st.removed[i] = true;
      ++removed;
    }
  }
  return removed;
}

}  // namespace

std::pair<CallLog, PruneReport> prune(const CallLog& log, minigl::FbSize fb) {
  PruneState st;
  st.records = &log.records();
  st.removed.assign(log.size(), false);

  PruneReport report;
  report.before_len = log.size();

  // Each rule can expose more work for the others (a removed clear may orphan
  // a color set; a removed upload may free a lifecycle), so run all three
  // until none of them moves.
  for (;;) {
    uint64_t r1 = pass_dead_lifecycles(st);
    uint64_t r2 = pass_shadowed_state_sets(st);
    uint64_t r3 = pass_predraw_elimination(st, fb);
    report.removed_create_destroy_pairs += r1;
    report.removed_shadowed_state_sets += r2;
    report.removed_predraw_calls += r3;
    if (r1 + r2 + r3 == 0) break;
  }

  std::vector<CallRecord> kept;
  kept.reserve(log.size());
  for (size_t i = 0; i < log.size(); ++i) {
    if (!st.removed[i]) kept.push_back(log.records()[i]);
  }
  report.after_len = kept.size();
  return {CallLog::from_records(std::move(kept), log.epoch()), report};
}

VirtualView virtual_view(const minigl::Driver& driver, const interpose::VirtualIdTable& vids) {
  VirtualView view;
  for (const auto& [vctx, rctx] : vids.entries(IdSpace::Context)) {
    const minigl::ContextState& cs = driver.context(rctx);
    VirtualContextView vcv;
    for (size_t ki = 0; ki < minigl::kKindCount; ++ki) {
      auto space = static_cast<IdSpace>(ki + 1);
      for (const auto& [virt, real] : vids.entries(space)) {
        auto it = cs.resources[ki].find(real);
        if (it != cs.resources[ki].end()) {
          vcv.resources[ki].emplace_back(virt, it->second.payload);
        }
      }
      vcv.bound[ki] = cs.bound[ki] == 0 ? 0 : vids.reverse(space, cs.bound[ki]);
    }
    vcv.clear_color = cs.clear_color;
    vcv.viewport = cs.viewport;
    vcv.fb_hash = fnv1a64(cs.fb.pixels);
    view.contexts.emplace_back(vctx, std::move(vcv));
  }
  return view;
}

}  // namespace glckpt::logstore
