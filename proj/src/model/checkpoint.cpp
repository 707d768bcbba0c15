// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "loaa/model/checkpoint.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "loaa/core/error.hpp"
#include "loaa/core/fileio.hpp"

namespace loaa {
namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  void f32s(const std::vector<float>& v) {
    for (float f : v) {
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      u32(bits);
    }
  }
  std::vector<std::uint8_t>& buf() { return buf_; }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  Reader(std::span<const std::uint8_t> b, std::size_t end) : b_(b), end_(end) {}
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return end_ - pos_; }
  void need(std::size_t n, const char* what) {
    if (remaining() < n) {
      throw LoadError("checkpoint truncated at offset " + std::to_string(pos_) + " while reading " + what + " (need " +
                      std::to_string(n) + " bytes, " + std::to_string(remaining()) + " left)");
    }
  }
  std::uint64_t le(int n, const char* what) {
    need(static_cast<std::size_t>(n), what);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(b_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::string str(std::size_t n) {
    need(n, "tensor name");
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void f32s(std::vector<float>& out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto bits = static_cast<std::uint32_t>(le(4, "tensor data"));
      std::memcpy(&out[i], &bits, 4);
    }
  }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32_of(const std::uint8_t* p, std::size_t n) {
  uLong c = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  while (n > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    c = crc32(c, p, chunk);
    p += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(c);
}

constexpr std::size_t kHeaderBytes = 12;
constexpr std::size_t kMinEntryBytes = 2 + 1 + 1 + 1;

}  // namespace

const CheckpointEntry* Checkpoint::find(std::string_view name) const {
  for (const auto& e : entries)
    if (e.name == name) return &e;
  return nullptr;
}

void Checkpoint::add(std::string name, bool frozen, Shape shape, std::vector<float> data) {
  if (shape_numel(shape) != data.size()) {
    throw DimensionError("checkpoint: tensor '" + name + "' shape " + shape_str(shape) + " vs " +
                         std::to_string(data.size()) + " values");
  }
  if (find(name)) throw ValidationError("checkpoint: duplicate tensor name '" + name + "'");
  entries.push_back({std::move(name), frozen, std::move(shape), std::move(data)});
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.bytes("LOAA", 4);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(ckpt.entries.size()));
  for (const auto& e : ckpt.entries) {
    if (e.name.size() > 0xFFFF) throw ValidationError("checkpoint: tensor name too long");
    if (e.shape.size() > 0xFF) throw ValidationError("checkpoint: tensor rank too large");
    w.u16(static_cast<std::uint16_t>(e.name.size()));
    w.bytes(e.name.data(), e.name.size());
    w.u8(e.frozen ? 1 : 0);
    w.u8(static_cast<std::uint8_t>(e.shape.size()));
    for (auto dim : e.shape) w.u64(dim);
    w.u8(0);
    w.f32s(e.data);
  }
  const auto crc = crc32_of(w.buf().data(), w.buf().size());
  w.u32(crc);
  return std::move(w.buf());
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes + 4) {
    throw LoadError("checkpoint truncated at offset " + std::to_string(bytes.size()) + ": header needs " +
                    std::to_string(kHeaderBytes + 4) + " bytes");
  }
  const std::size_t body = bytes.size() - 4;
  if (std::memcmp(bytes.data(), "LOAA", 4) != 0) {
    std::size_t off = 0;
    while (off < 4 && bytes[off] == static_cast<std::uint8_t>("LOAA"[off])) ++off;
    throw LoadError("checkpoint: bad magic at offset " + std::to_string(off));
  }
  Reader r(bytes, body);
  r.le(4, "magic");
  const auto version = r.le(4, "version");
  if (version != kCheckpointVersion) {
    throw LoadError("checkpoint: unsupported version " + std::to_string(version) + " at offset 4");
  }
  const auto count = r.le(4, "tensor count");
  if (count > (body - kHeaderBytes) / kMinEntryBytes) {
    throw LoadError("checkpoint: tensor count " + std::to_string(count) + " at offset 8 exceeds what " +
                    std::to_string(body) + " bytes can hold");
  }
  Checkpoint ckpt;
  for (std::uint64_t i = 0; i < count; ++i) {
    CheckpointEntry e;
    const auto name_len = r.le(2, "name length");
    e.name = r.str(static_cast<std::size_t>(name_len));
    const std::size_t frozen_at = r.pos();
    const auto frozen = r.le(1, "frozen flag");
    if (frozen > 1) throw LoadError("checkpoint: invalid frozen flag at offset " + std::to_string(frozen_at));
    e.frozen = frozen == 1;
    const auto rank = r.le(1, "rank");
    std::size_t numel = 1;
    for (std::uint64_t k = 0; k < rank; ++k) {
      const std::size_t dim_at = r.pos();
      const auto dim = r.le(8, "dimension");
      if (dim != 0 && numel > (std::size_t{1} << 40) / dim) {
        throw LoadError("checkpoint: implausible dimension at offset " + std::to_string(dim_at));
      }
      e.shape.push_back(static_cast<std::size_t>(dim));
      numel *= static_cast<std::size_t>(dim);
    }
    const std::size_t dtype_at = r.pos();
    const auto dtype = r.le(1, "dtype tag");
    if (dtype != 0) {
      throw LoadError("checkpoint: unsupported dtype tag " + std::to_string(dtype) + " at offset " +
                      std::to_string(dtype_at));
    }
    r.need(numel * 4, "tensor data");
    e.data.resize(numel);
    r.f32s(e.data, numel);
    if (ckpt.find(e.name)) {
      throw LoadError("checkpoint: duplicate tensor name '" + e.name + "' before offset " + std::to_string(r.pos()));
    }
    ckpt.entries.push_back(std::move(e));
  }
  if (r.remaining() != 0) {
    throw LoadError("checkpoint: tensor count at offset 8 disagrees with contents; " +
                    std::to_string(r.remaining()) + " unread bytes at offset " + std::to_string(r.pos()));
  }
  std::uint32_t stored = 0;
  for (int i = 0; i < 4; ++i) stored |= static_cast<std::uint32_t>(bytes[body + i]) << (8 * i);
  const auto computed = crc32_of(bytes.data(), body);
  if (stored != computed) {
    std::ostringstream os;
    os << "checkpoint: CRC mismatch at offset " << body << " (stored 0x" << std::hex << stored << ", computed 0x"
       << computed << ")";
    throw LoadError(os.str());
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file_atomic(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_checkpoint(bytes);
  } catch (const LoadError& e) {
    throw LoadError(path.string() + ": " + e.what());
  }
}

Checkpoint to_checkpoint(const Model<float>& m) {
  Checkpoint ck;
  const auto& c = m.config;
  std::vector<float> meta{static_cast<float>(c.d),         static_cast<float>(c.n_layers),
                          static_cast<float>(c.n_heads),   static_cast<float>(c.mlp_ratio),
                          static_cast<float>(c.grid.freq), static_cast<float>(c.grid.time),
                          static_cast<float>(c.n_classes), static_cast<float>(c.patch_dim)};
  const std::size_t n_meta = meta.size();
  ck.add("meta.config", true, {n_meta}, std::move(meta));
  for (const auto& nt : named_tensors(m)) {
    ck.add(nt.name, !nt.tensor.requires_grad(), nt.tensor.shape(),
           std::vector<float>(nt.tensor.values().begin(), nt.tensor.values().end()));
  }
  return ck;
}

BackboneConfig config_from_checkpoint(const Checkpoint& ckpt) {
  const auto* meta = ckpt.find("meta.config");
  if (!meta || meta->data.size() != 8) throw LoadError("checkpoint: missing or malformed meta.config");
  auto u = [&](std::size_t i) { return static_cast<std::size_t>(meta->data[i]); };
  BackboneConfig c;
  c.d = u(0);
  c.n_layers = u(1);
  c.n_heads = u(2);
  c.mlp_ratio = u(3);
  c.grid = {u(4), u(5)};
  c.n_classes = u(6);
  c.patch_dim = u(7);
  c.validate();
  return c;
}

void load_into(Model<float>& m, const Checkpoint& ckpt) {
  std::vector<std::string> problems;
  std::map<std::string, const CheckpointEntry*> by_name;
  for (const auto& e : ckpt.entries)
    if (e.name != "meta.config") by_name[e.name] = &e;
  auto expected = named_tensors(m);
  for (const auto& nt : expected) {
    auto it = by_name.find(nt.name);
    if (it == by_name.end()) {
      problems.push_back("missing " + nt.name + " " + shape_str(nt.tensor.shape()));
      continue;
    }
    if (it->second->shape != nt.tensor.shape()) {
      problems.push_back("shape " + nt.name + ": file " + shape_str(it->second->shape) + " vs model " +
                         shape_str(nt.tensor.shape()));
    }
    by_name.erase(it);
  }
  for (const auto& [name, e] : by_name) problems.push_back("unexpected " + name + " " + shape_str(e->shape));
  if (!problems.empty()) {
    std::string msg = "checkpoint does not match model (" + std::to_string(problems.size()) + " differences):";
    for (const auto& p : problems) msg += "\n  " + p;
    throw LoadError(msg);
  }
  for (auto& nt : expected) {
    const auto* e = ckpt.find(nt.name);
    auto dst = nt.tensor.mutable_values();
    std::copy(e->data.begin(), e->data.end(), dst.begin());
    nt.tensor.set_requires_grad(!e->frozen);
  }
}

Model<float> model_from_checkpoint(const Checkpoint& ckpt) {
  const auto cfg = config_from_checkpoint(ckpt);
  auto m = init_model<float>(cfg, 0);
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    for (BlockKind kind : {BlockKind::attn, BlockKind::ffn}) {
      const auto* e = ckpt.find(adapter_tensor_name(l, kind, "down", "w"));
      if (!e) continue;
      if (e->shape.size() != 4) throw LoadError("checkpoint: adapter " + e->name + " must be rank 4");
      const KernelShape k{e->shape[0], e->shape[1]};
      AdapterWeights<float> w;
      w.kernel = k;
      w.down_w = Tensor<float>({k.kf, k.kt, e->shape[2], e->shape[3]});
      w.down_b = Tensor<float>({e->shape[3]});
      w.up_w = Tensor<float>({k.kf, k.kt, e->shape[3], e->shape[2]});
      w.up_b = Tensor<float>({e->shape[2]});
      m.adapters.attach(kind, l, std::move(w));
    }
  }
  load_into(m, ckpt);
  return m;
}

std::vector<std::uint8_t> backbone_bytes(const Model<float>& m) {
  Checkpoint ck;
  for (const auto& nt : named_tensors(m)) {
    if (!nt.backbone) continue;
    ck.add(nt.name, true, nt.tensor.shape(), std::vector<float>(nt.tensor.values().begin(), nt.tensor.values().end()));
  }
  return encode_checkpoint(ck);
}

}  // namespace loaa
