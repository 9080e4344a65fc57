#include "glckpt/interpose.hpp"

#include <string>

namespace glckpt::interpose {

const char* space_name(IdSpace space) {
  switch (space) {
    case IdSpace::Context: return "context";
    case IdSpace::Shader: return "shader";
    case IdSpace::Program: return "program";
    case IdSpace::Buffer: return "buffer";
    case IdSpace::Texture: return "texture";
    case IdSpace::Window: return "window";
  }
  return "?";
}

uint32_t VirtualIdTable::allocate(IdSpace s, uint32_t real) {
  if (real == 0) throw Error(Errc::BadValue, "real id 0 is not mappable");
  Space& sp = space(s);
  if (sp.r2v.count(real)) {
    throw Error(Errc::RealIdCollision,
                std::string(space_name(s)) + " real " + std::to_string(real));
  }
  uint32_t virt = sp.next++;
  sp.v2r.emplace(virt, real);
  sp.r2v.emplace(real, virt);
  return virt;
}

void VirtualIdTable::install(IdSpace s, uint32_t virt, uint32_t real) {
  if (virt == 0 || real == 0) throw Error(Errc::BadValue, "id 0 is not mappable");
  Space& sp = space(s);
  if (sp.v2r.count(virt)) {
    throw Error(Errc::BadValue, std::string(space_name(s)) + " virtual " +
                                    std::to_string(virt) + " already mapped");
  }
  if (sp.r2v.count(real)) {
    throw Error(Errc::RealIdCollision,
                std::string(space_name(s)) + " real " + std::to_string(real));
  }
  sp.v2r.emplace(virt, real);
  sp.r2v.emplace(real, virt);
  if (virt >= sp.next) sp.next = virt + 1;
}

uint32_t VirtualIdTable::resolve(IdSpace s, uint32_t virt) const {
  if (virt == 0) return 0;
  const Space& sp = space(s);
  auto it = sp.v2r.find(virt);
  if (it == sp.v2r.end()) {
    throw Error(Errc::StaleVirtualId,
                std::string(space_name(s)) + " virtual " + std::to_string(virt));
  }
  return it->second;
}

uint32_t VirtualIdTable::reverse(IdSpace s, uint32_t real) const {
  if (real == 0) return 0;
  const Space& sp = space(s);
  auto it = sp.r2v.find(real);
  if (it == sp.r2v.end()) {
    throw Error(Errc::UnknownId, std::string(space_name(s)) + " real " + std::to_string(real));
  }
  return it->second;
}

void VirtualIdTable::rebind(IdSpace s, uint32_t virt, uint32_t new_real) {
  if (new_real == 0) throw Error(Errc::BadValue, "real id 0 is not mappable");
  Space& sp = space(s);
  auto it = sp.v2r.find(virt);
  if (it == sp.v2r.end()) {
    throw Error(Errc::UnknownVirtual,
                std::string(space_name(s)) + " virtual " + std::to_string(virt));
  }
  auto taken = sp.r2v.find(new_real);
  if (taken != sp.r2v.end() && taken->second != virt) {
    throw Error(Errc::RealIdCollision,
                std::string(space_name(s)) + " real " + std::to_string(new_real));
  }
  sp.r2v.erase(it->second);
  it->second = new_real;
  sp.r2v[new_real] = virt;
}

void VirtualIdTable::erase(IdSpace s, uint32_t virt) {
  Space& sp = space(s);
  auto it = sp.v2r.find(virt);
  if (it == sp.v2r.end()) {
    throw Error(Errc::UnknownVirtual,
                std::string(space_name(s)) + " virtual " + std::to_string(virt));
  }
  sp.r2v.erase(it->second);
  sp.v2r.erase(it);
}

bool VirtualIdTable::contains(IdSpace s, uint32_t virt) const {
  return space(s).v2r.count(virt) != 0;
}

size_t VirtualIdTable::size(IdSpace s) const { return space(s).v2r.size(); }

uint32_t VirtualIdTable::next_virtual(IdSpace s) const { return space(s).next; }

void VirtualIdTable::set_next_virtual(IdSpace s, uint32_t next) {
  Space& sp = space(s);
  uint32_t max_live = sp.v2r.empty() ? 0 : sp.v2r.rbegin()->first;
  if (next < 1 || next <= max_live) {
    throw Error(Errc::BadValue, "next_virtual would reuse a live virtual id");
  }
  sp.next = next;
}

std::vector<std::pair<uint32_t, uint32_t>> VirtualIdTable::entries(IdSpace s) const {
  const Space& sp = space(s);
  return {sp.v2r.begin(), sp.v2r.end()};
}

std::vector<uint32_t> VirtualIdTable::virtuals(IdSpace s) const {
  std::vector<uint32_t> out;
  out.reserve(space(s).v2r.size());
  for (const auto& [v, r] : space(s).v2r) out.push_back(v);
  return out;
}

void VirtualIdTable::serialize(wire::ByteWriter& out) const {
  for (const Space& sp : spaces_) {
    out.u32(sp.next);
    out.u32(static_cast<uint32_t>(sp.v2r.size()));
    for (const auto& [v, r] : sp.v2r) {
      out.u32(v);
      out.u32(r);
    }
  }
}

VirtualIdTable VirtualIdTable::deserialize(wire::ByteReader& in) {
  VirtualIdTable t;
  for (Space& sp : t.spaces_) {
    uint32_t next = in.u32();
    uint32_t count = in.u32();
    uint32_t prev_virt = 0;
    for (uint32_t i = 0; i < count; ++i) {
      uint32_t v = in.u32();
      uint32_t r = in.u32();
      if (v == 0 || r == 0 || v <= prev_virt || sp.r2v.count(r)) {
        throw Error(Errc::ImageCorrupt, "malformed id table entry");
      }
      prev_virt = v;
      sp.v2r.emplace(v, r);
      sp.r2v.emplace(r, v);
    }
    if (next < 1 || next <= prev_virt) {
      throw Error(Errc::ImageCorrupt, "id table next_virtual not past live entries");
    }
    sp.next = next;
  }
  return t;
}

CallClass classify(Opcode op) {
  switch (op) {
    case Opcode::CreateContext: return CallClass::ResourceCreate;
    case Opcode::GenResource: return CallClass::ResourceCreate;
    case Opcode::DeleteResource: return CallClass::ResourceDestroy;
    case Opcode::UploadData: return CallClass::DataUpload;
    case Opcode::SetState: return CallClass::StateSet;
    case Opcode::Bind: return CallClass::Bind;
    case Opcode::Clear: return CallClass::Clear;
    case Opcode::DrawTriangle: return CallClass::Draw;
    case Opcode::ReadFramebuffer: return CallClass::PureRead;
  }
  throw Error(Errc::BadValue, "opcode " + std::to_string(static_cast<unsigned>(op)));
}

std::vector<uint8_t> encode_args(const CreateContextArgs& a) {
  wire::ByteWriter w;
  w.u32(a.result_virtual);
  return w.take();
}

std::vector<uint8_t> encode_args(const GenResourceArgs& a) {
  wire::ByteWriter w;
  w.u8(static_cast<uint8_t>(a.kind));
  w.u32(a.result_virtual);
  return w.take();
}

std::vector<uint8_t> encode_args(const DeleteResourceArgs& a) {
  wire::ByteWriter w;
  w.u8(static_cast<uint8_t>(a.kind));
  w.u32(a.virt);
  return w.take();
}

std::vector<uint8_t> encode_args(const UploadDataArgs& a) {
  wire::ByteWriter w;
  w.u8(static_cast<uint8_t>(a.kind));
  w.u32(a.virt);
  w.u32(static_cast<uint32_t>(a.bytes.size()));
  w.bytes(a.bytes);
  return w.take();
}

std::vector<uint8_t> encode_args(const SetStateArgs& a) {
  wire::ByteWriter w;
  w.u8(static_cast<uint8_t>(a.key));
  if (const auto* c = std::get_if<minigl::ClearColor>(&a.value)) {
    w.f32(c->r);
    w.f32(c->g);
    w.f32(c->b);
    w.f32(c->a);
  } else {
    const auto& r = std::get<minigl::ViewportRect>(a.value);
    w.i32(r.x);
    w.i32(r.y);
    w.i32(r.w);
    w.i32(r.h);
  }
  return w.take();
}

std::vector<uint8_t> encode_args(const BindArgs& a) {
  wire::ByteWriter w;
  w.u8(static_cast<uint8_t>(a.kind));
  w.u32(a.virt);
  return w.take();
}

std::vector<uint8_t> encode_args(const DrawTriangleArgs& a) {
  wire::ByteWriter w;
  for (const auto& v : {a.v0, a.v1, a.v2}) {
    w.i32(v.x);
    w.i32(v.y);
  }
  w.u8(a.color.r);
  w.u8(a.color.g);
  w.u8(a.color.b);
  w.u8(a.color.a);
  return w.take();
}

namespace {

void expect_done(const wire::ByteReader& r, Errc err) {
  if (!r.done()) throw Error(err, "trailing bytes in call arguments");
}

minigl::ResourceKind read_kind(wire::ByteReader& r, Errc err) {
  uint8_t raw = r.u8();
  if (!minigl::kind_valid(raw)) throw Error(err, "bad resource kind in call arguments");
  return static_cast<minigl::ResourceKind>(raw);
}

}  // namespace

CreateContextArgs decode_create_context(const std::vector<uint8_t>& args, Errc err) {
  wire::ByteReader r(args, err);
  CreateContextArgs a{r.u32()};
  expect_done(r, err);
  return a;
}

GenResourceArgs decode_gen_resource(const std::vector<uint8_t>& args, Errc err) {
  wire::ByteReader r(args, err);
  GenResourceArgs a;
  a.kind = read_kind(r, err);
  a.result_virtual = r.u32();
  expect_done(r, err);
  return a;
}

DeleteResourceArgs decode_delete_resource(const std::vector<uint8_t>& args, Errc err) {
  wire::ByteReader r(args, err);
  DeleteResourceArgs a;
  a.kind = read_kind(r, err);
  a.virt = r.u32();
  expect_done(r, err);
  return a;
}

UploadDataArgs decode_upload_data(const std::vector<uint8_t>& args, Errc err) {
  wire::ByteReader r(args, err);
  UploadDataArgs a;
  a.kind = read_kind(r, err);
  a.virt = r.u32();
  uint32_t len = r.u32();
  a.bytes = r.bytes(len);
  expect_done(r, err);
  return a;
}

SetStateArgs decode_set_state(const std::vector<uint8_t>& args, Errc err) {
  wire::ByteReader r(args, err);
  SetStateArgs a;
  uint8_t raw_key = r.u8();
  switch (raw_key) {
    case static_cast<uint8_t>(minigl::StateKey::ClearColor): {
      a.key = minigl::StateKey::ClearColor;
      minigl::ClearColor c;
      c.r = r.f32();
      c.g = r.f32();
      c.b = r.f32();
      c.a = r.f32();
      a.value = c;
      break;
    }
    case static_cast<uint8_t>(minigl::StateKey::Viewport): {
      a.key = minigl::StateKey::Viewport;
      minigl::ViewportRect rect;
      rect.x = r.i32();
      rect.y = r.i32();
      rect.w = r.i32();
      rect.h = r.i32();
      a.value = rect;
      break;
    }
    default:
      throw Error(err, "bad state key in call arguments");
  }
  expect_done(r, err);
  return a;
}

BindArgs decode_bind(const std::vector<uint8_t>& args, Errc err) {
  wire::ByteReader r(args, err);
  BindArgs a;
  a.kind = read_kind(r, err);
  a.virt = r.u32();
  expect_done(r, err);
  return a;
}

DrawTriangleArgs decode_draw_triangle(const std::vector<uint8_t>& args, Errc err) {
  wire::ByteReader r(args, err);
  DrawTriangleArgs a;
  for (auto* v : {&a.v0, &a.v1, &a.v2}) {
    v->x = r.i32();
    v->y = r.i32();
  }
  a.color.r = r.u8();
  a.color.g = r.u8();
  a.color.b = r.u8();
  a.color.a = r.u8();
  expect_done(r, err);
  return a;
}

namespace {

void require_kind(minigl::ResourceKind kind) {
  if (!minigl::kind_valid(static_cast<uint8_t>(kind))) {
    throw Error(Errc::UnknownKind,
                "resource kind " + std::to_string(static_cast<unsigned>(kind)));
  }
}

}  // namespace

void Interceptor::append_record(uint32_t thread, uint32_t vctx, Opcode op, bool fault,
                                std::vector<uint8_t> args) {
  CallRecord rec;
  rec.seq = log_.next_seq();
  rec.thread = thread;
  rec.ctx = vctx;
  rec.opcode = op;
  rec.cls = classify(op);
  rec.fault = fault;
  rec.args = std::move(args);
  log_.append(std::move(rec));
}

uint32_t Interceptor::create_context(uint32_t thread) {
  std::lock_guard lock(mu_);
  uint32_t virt = 0;
  try {
    uint32_t real = driver_.create_context();
    virt = vids_.allocate(IdSpace::Context, real);
  } catch (const Error&) {
    append_record(thread, 0, Opcode::CreateContext, true, encode_args(CreateContextArgs{0}));
    throw;
  }
  append_record(thread, 0, Opcode::CreateContext, false, encode_args(CreateContextArgs{virt}));
  return virt;
}

uint32_t Interceptor::gen_resource(uint32_t thread, uint32_t vctx, minigl::ResourceKind kind) {
  std::lock_guard lock(mu_);
  uint32_t virt = 0;
  try {
    require_kind(kind);
    uint32_t rctx = vids_.resolve(IdSpace::Context, vctx);
    uint32_t real = driver_.gen_resource(rctx, kind);
    virt = vids_.allocate(space_for_kind(kind), real);
  } catch (const Error&) {
    append_record(thread, vctx, Opcode::GenResource, true, encode_args(GenResourceArgs{kind, 0}));
    throw;
  }
  append_record(thread, vctx, Opcode::GenResource, false, encode_args(GenResourceArgs{kind, virt}));
  return virt;
}

void Interceptor::delete_resource(uint32_t thread, uint32_t vctx, minigl::ResourceKind kind,
                                  uint32_t virt) {
  std::lock_guard lock(mu_);
  std::vector<uint8_t> args = encode_args(DeleteResourceArgs{kind, virt});
  try {
    require_kind(kind);
    uint32_t rctx = vids_.resolve(IdSpace::Context, vctx);
    uint32_t real = vids_.resolve(space_for_kind(kind), virt);
    driver_.delete_resource(rctx, kind, real);
    // The virtual id dies with the object; the number is never reissued.
    vids_.erase(space_for_kind(kind), virt);
  } catch (const Error&) {
    append_record(thread, vctx, Opcode::DeleteResource, true, std::move(args));
    throw;
  }
  append_record(thread, vctx, Opcode::DeleteResource, false, std::move(args));
}

void Interceptor::upload_data(uint32_t thread, uint32_t vctx, minigl::ResourceKind kind,
                              uint32_t virt, std::vector<uint8_t> bytes) {
  std::lock_guard lock(mu_);
  std::vector<uint8_t> args = encode_args(UploadDataArgs{kind, virt, bytes});
  try {
    require_kind(kind);
    uint32_t rctx = vids_.resolve(IdSpace::Context, vctx);
    uint32_t real = vids_.resolve(space_for_kind(kind), virt);
    driver_.upload_data(rctx, kind, real, std::move(bytes));
  } catch (const Error&) {
    append_record(thread, vctx, Opcode::UploadData, true, std::move(args));
    throw;
  }
  append_record(thread, vctx, Opcode::UploadData, false, std::move(args));
}

void Interceptor::set_state(uint32_t thread, uint32_t vctx, minigl::StateKey key,
                            const minigl::StateValue& value) {
  std::lock_guard lock(mu_);
  std::vector<uint8_t> args = encode_args(SetStateArgs{key, value});
  try {
    uint32_t rctx = vids_.resolve(IdSpace::Context, vctx);
    driver_.set_state(rctx, key, value);
  } catch (const Error&) {
    append_record(thread, vctx, Opcode::SetState, true, std::move(args));
    throw;
  }
  append_record(thread, vctx, Opcode::SetState, false, std::move(args));
}

void Interceptor::bind(uint32_t thread, uint32_t vctx, minigl::ResourceKind kind, uint32_t virt) {
  std::lock_guard lock(mu_);
  std::vector<uint8_t> args = encode_args(BindArgs{kind, virt});
  try {
    require_kind(kind);
    uint32_t rctx = vids_.resolve(IdSpace::Context, vctx);
    uint32_t real = vids_.resolve(space_for_kind(kind), virt);  // 0 stays 0: unbind
    driver_.bind(rctx, kind, real);
  } catch (const Error&) {
    append_record(thread, vctx, Opcode::Bind, true, std::move(args));
    throw;
  }
  append_record(thread, vctx, Opcode::Bind, false, std::move(args));
}

void Interceptor::clear(uint32_t thread, uint32_t vctx) {
  std::lock_guard lock(mu_);
  try {
    driver_.clear(vids_.resolve(IdSpace::Context, vctx));
  } catch (const Error&) {
    append_record(thread, vctx, Opcode::Clear, true, {});
    throw;
  }
  append_record(thread, vctx, Opcode::Clear, false, {});
}

void Interceptor::draw_triangle(uint32_t thread, uint32_t vctx, minigl::Vec2i v0, minigl::Vec2i v1,
                                minigl::Vec2i v2, minigl::Color4b color) {
  std::lock_guard lock(mu_);
  std::vector<uint8_t> args = encode_args(DrawTriangleArgs{v0, v1, v2, color});
  try {
    driver_.draw_triangle(vids_.resolve(IdSpace::Context, vctx), v0, v1, v2, color);
  } catch (const Error&) {
    append_record(thread, vctx, Opcode::DrawTriangle, true, std::move(args));
    throw;
  }
  append_record(thread, vctx, Opcode::DrawTriangle, false, std::move(args));
}

std::vector<uint8_t> Interceptor::read_framebuffer(uint32_t vctx) const {
  std::lock_guard lock(mu_);
  return driver_.read_framebuffer(vids_.resolve(IdSpace::Context, vctx));
}

uint64_t Interceptor::framebuffer_hash(uint32_t vctx) const {
  std::lock_guard lock(mu_);
  return driver_.framebuffer_hash(vids_.resolve(IdSpace::Context, vctx));
}

}  // namespace glckpt::interpose
