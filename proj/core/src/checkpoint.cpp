#include "ssgait/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>

#include "ssgait/errors.hpp"

namespace ssgait {

namespace {

constexpr char kMagic[8] = {'S', 'S', 'G', 'A', 'I', 'T', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double x) { put_u64(out, std::bit_cast<std::uint64_t>(x)); }

void put_str(std::string& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}

struct Cursor {
  const std::string& buf;
  size_t pos = 0;

  void need(size_t n) const {
    if (pos + n > buf.size()) throw CorruptCheckpoint("checkpoint truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t len = u32();
    need(len);
    std::string s = buf.substr(pos, len);
    pos += len;
    return s;
  }
};

std::uint32_t crc_of(const std::string& s, size_t len) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(s.data()), static_cast<uInt>(len)));
}

}  // namespace

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : blocks) {
    if (n == name) return &t;
  }
  return nullptr;
}

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  std::string out;
  out.append(kMagic, sizeof(kMagic));
  put_u32(out, kVersion);
  put_str(out, ck.phase);
  put_u64(out, ck.step);
  put_str(out, ck.config_echo);
  put_u32(out, static_cast<std::uint32_t>(ck.blocks.size()));
  for (const auto& [name, t] : ck.blocks) {
    put_str(out, name);
    put_u32(out, static_cast<std::uint32_t>(t.ndim()));
    for (int i = 0; i < t.ndim(); ++i) put_u32(out, static_cast<std::uint32_t>(t.dim(i)));
    for (std::int64_t i = 0; i < t.size(); ++i) put_f64(out, t[i]);
  }
  put_u32(out, crc_of(out, out.size()));

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write checkpoint: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("short write on checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read checkpoint: " + path);
  std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

  if (buf.size() < sizeof(kMagic) + 8) throw CorruptCheckpoint("checkpoint too small");
  if (std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0) {
    throw CorruptCheckpoint("bad magic: not a checkpoint file");
  }
  const std::uint32_t stored_crc =
      static_cast<std::uint32_t>(static_cast<unsigned char>(buf[buf.size() - 4])) |
      static_cast<std::uint32_t>(static_cast<unsigned char>(buf[buf.size() - 3])) << 8 |
      static_cast<std::uint32_t>(static_cast<unsigned char>(buf[buf.size() - 2])) << 16 |
      static_cast<std::uint32_t>(static_cast<unsigned char>(buf[buf.size() - 1])) << 24;
  if (crc_of(buf, buf.size() - 4) != stored_crc) {
    throw CorruptCheckpoint("checksum mismatch: " + path);
  }

  Cursor c{buf, sizeof(kMagic)};
  const std::uint32_t version = c.u32();
  if (version != kVersion) {
    throw VersionMismatch("checkpoint format version " + std::to_string(version) +
                          ", expected " + std::to_string(kVersion));
  }
  Checkpoint ck;
  ck.phase = c.str();
  ck.step = c.u64();
  ck.config_echo = c.str();
  const std::uint32_t nblocks = c.u32();
  ck.blocks.reserve(nblocks);
  for (std::uint32_t bi = 0; bi < nblocks; ++bi) {
    std::string name = c.str();
    const std::uint32_t ndim = c.u32();
    if (ndim < 1 || ndim > 4) throw CorruptCheckpoint("block rank out of range");
    std::vector<int> shape;
    std::int64_t total = 1;
    for (std::uint32_t i = 0; i < ndim; ++i) {
      const std::uint32_t d = c.u32();
      if (d == 0 || d > (1u << 24)) throw CorruptCheckpoint("block dimension out of range");
      shape.push_back(static_cast<int>(d));
      total *= d;
    }
    c.need(static_cast<size_t>(total) * 8);
    Tensor t(shape);
    for (std::int64_t i = 0; i < total; ++i) t[i] = c.f64();
    ck.blocks.emplace_back(std::move(name), std::move(t));
  }
  if (c.pos != buf.size() - 4) throw CorruptCheckpoint("trailing bytes in checkpoint");
  return ck;
}

namespace {

void restore(const Checkpoint& ck, const std::string& name, Tensor& dst) {
  const Tensor* src = ck.find(name);
  if (!src) throw VersionMismatch("checkpoint lacks block '" + name + "'");
  if (!src->same_shape(dst)) {
    throw VersionMismatch("block '" + name + "' has shape " + src->shape_str() +
                          ", expected " + dst.shape_str());
  }
  dst = *src;
}

}  // namespace

Checkpoint pack_pretrain(const OnlineNetwork& online, const TargetNetwork& target,
                         std::uint64_t step, std::string config_echo) {
  Checkpoint ck;
  ck.phase = "pretrain";
  ck.step = step;
  ck.config_echo = std::move(config_echo);
  for (const Param* p : online.backbone.active(online.cfg)) ck.add("online." + p->name, p->value);
  ck.add("online.proj.w", online.proj.w.value);
  ck.add("online.proj.b", online.proj.b.value);
  ck.add("online.proj.bn.gamma", online.proj.gamma.value);
  ck.add("online.proj.bn.beta", online.proj.beta.value);
  ck.add("online.proj.bn.run_mean", online.proj.run_mean);
  ck.add("online.proj.bn.run_var", online.proj.run_var);
  ck.add("online.pred.w", online.pred.w.value);
  ck.add("online.pred.b", online.pred.b.value);

  BackboneConfig enc_cfg = online.cfg;
  for (const Param* p : target.encoder.active(enc_cfg)) {
    // The temporal blocks and output maps of the momentum copy are inert;
    // only encoder + spatial head + projection define the target branch.
    if (p->name.rfind("tcn.", 0) == 0 || p->name.rfind("bins.", 0) == 0) continue;
    ck.add("target." + p->name, p->value);
  }
  ck.add("target.proj.w", target.proj.w.value);
  ck.add("target.proj.b", target.proj.b.value);
  ck.add("target.proj.bn.gamma", target.proj.gamma.value);
  ck.add("target.proj.bn.beta", target.proj.beta.value);
  ck.add("target.proj.bn.run_mean", target.proj.run_mean);
  ck.add("target.proj.bn.run_var", target.proj.run_var);
  return ck;
}

void unpack_pretrain(const Checkpoint& ck, OnlineNetwork& online, TargetNetwork& target) {
  if (ck.phase != "pretrain") {
    throw VersionMismatch("expected a pretrain checkpoint, found phase '" + ck.phase + "'");
  }
  for (Param* p : online.backbone.active(online.cfg)) restore(ck, "online." + p->name, p->value);
  restore(ck, "online.proj.w", online.proj.w.value);
  restore(ck, "online.proj.b", online.proj.b.value);
  restore(ck, "online.proj.bn.gamma", online.proj.gamma.value);
  restore(ck, "online.proj.bn.beta", online.proj.beta.value);
  restore(ck, "online.proj.bn.run_mean", online.proj.run_mean);
  restore(ck, "online.proj.bn.run_var", online.proj.run_var);
  restore(ck, "online.pred.w", online.pred.w.value);
  restore(ck, "online.pred.b", online.pred.b.value);
  for (Param* p : target.encoder.active(online.cfg)) {
    if (p->name.rfind("tcn.", 0) == 0 || p->name.rfind("bins.", 0) == 0) continue;
    restore(ck, "target." + p->name, p->value);
  }
  restore(ck, "target.proj.w", target.proj.w.value);
  restore(ck, "target.proj.b", target.proj.b.value);
  restore(ck, "target.proj.bn.gamma", target.proj.gamma.value);
  restore(ck, "target.proj.bn.beta", target.proj.beta.value);
  restore(ck, "target.proj.bn.run_mean", target.proj.run_mean);
  restore(ck, "target.proj.bn.run_var", target.proj.run_var);
}

Checkpoint pack_backbone(const BackboneConfig& cfg, const BackboneParams& params,
                         std::uint64_t step, std::string config_echo) {
  Checkpoint ck;
  ck.phase = "finetune";
  ck.step = step;
  ck.config_echo = std::move(config_echo);
  for (const Param* p : params.active(cfg)) ck.add(p->name, p->value);
  return ck;
}

void unpack_backbone(const Checkpoint& ck, const BackboneConfig& cfg,
                     BackboneParams& params) {
  if (ck.phase != "finetune") {
    throw VersionMismatch("expected a finetune checkpoint, found phase '" + ck.phase + "'");
  }
  for (Param* p : params.active(cfg)) restore(ck, p->name, p->value);
}

void unpack_backbone_from_pretrain(const Checkpoint& ck, const BackboneConfig& cfg,
                                   BackboneParams& params) {
  if (ck.phase != "pretrain") {
    throw VersionMismatch("expected a pretrain checkpoint, found phase '" + ck.phase + "'");
  }
  for (Param* p : params.active(cfg)) restore(ck, "online." + p->name, p->value);
}

}  // namespace ssgait
