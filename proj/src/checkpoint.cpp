#include "gntm/checkpoint.hpp"

#include <map>

namespace gntm {

namespace {

void write_config(BinaryWriter& w, const ModelConfig& c) {
  for (std::size_t v : {c.input_features, c.window, c.gru1_units, c.gru2_units, c.memory_rows, c.memory_width,
                        c.controller_units, c.dense_units, c.classes}) {
    w.u32(static_cast<std::uint32_t>(v));
  }
  w.u8(c.additive_write ? 1 : 0);
}

ModelConfig read_config(BinaryReader& r) {
  ModelConfig c;
  for (std::size_t* v : {&c.input_features, &c.window, &c.gru1_units, &c.gru2_units, &c.memory_rows, &c.memory_width,
                         &c.controller_units, &c.dense_units, &c.classes}) {
    *v = r.u32();
  }
  c.additive_write = r.u8() != 0;
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("checkpoint config block is invalid: ") + e.what());
  }
  return c;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  BinaryWriter w;
  write_header(w, ContainerKind::checkpoint, kCheckpointVersion);
  write_config(w, ckpt.config);
  w.u32(ckpt.epoch);
  w.f64(ckpt.val_loss);
  w.u64(ckpt.seed);

  std::vector<std::pair<std::string, const Tensor*>> tensors;
  ckpt.params.for_each([&](const std::string& name, const Tensor& t) { tensors.emplace_back(name, &t); });
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    w.str(name);
    w.u32(static_cast<std::uint32_t>(t->rank()));
    for (std::size_t d : t->shape()) w.u64(d);
    BinaryWriter payload;
    for (double v : t->values()) payload.f64(v);
    w.bytes(payload.buffer().data(), payload.size());
    w.u32(crc32_of(payload.buffer().data(), payload.size()));
  }
  write_norm_stats(w, ckpt.norm);
  save_with_trailer(path, w);
}

Checkpoint load_checkpoint(const std::string& path, const std::optional<ModelConfig>& expected) {
  const auto bytes = load_with_trailer(path);
  BinaryReader r(bytes.data(), bytes.size());
  read_header(r, ContainerKind::checkpoint, kCheckpointVersion);
  Checkpoint ckpt;
  ckpt.config = read_config(r);
  ckpt.epoch = r.u32();
  ckpt.val_loss = r.f64();
  ckpt.seed = r.u64();

  const std::uint32_t count = r.u32();
  std::map<std::string, Tensor> stored;
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::string name = r.str();
    const std::uint32_t rank = r.u32();
    if (rank < 1 || rank > 3) throw FormatError("tensor '" + name + "' has unsupported rank " + std::to_string(rank));
    Shape shape(rank);
    std::uint64_t n = 1;
    for (auto& d : shape) {
      d = r.u64();
      n *= d;
    }
    if (n > r.remaining() / 8) throw FormatError("truncated file: tensor '" + name + "' payload");
    const std::uint8_t* raw = r.take(n * 8);
    if (r.u32() != crc32_of(raw, n * 8)) throw FormatError("checksum mismatch in tensor '" + name + "'");
    BinaryReader payload(raw, n * 8);
    std::vector<double> data(n);
    for (auto& v : data) v = payload.f64();
    stored.emplace(name, Tensor(shape, std::move(data)));
  }
  ckpt.norm = read_norm_stats(r);

  // Compare against the expected layout when provided, else the stored config.
  const ModelConfig& target = expected ? *expected : ckpt.config;
  ckpt.params = ModelParams::zeros(target);
  std::size_t matched = 0;
  ckpt.params.for_each([&](const std::string& name, Tensor& t) {
    const auto it = stored.find(name);
    if (it == stored.end()) throw FormatError("checkpoint is missing tensor '" + name + "'");
    if (it->second.shape() != t.shape()) {
      throw DimensionError("tensor '" + name + "': checkpoint has shape " + shape_str(it->second.shape()) +
                           ", model expects " + shape_str(t.shape()));
    }
    t = it->second;
    ++matched;
  });
  if (stored.size() != count || stored.size() != matched) {
    throw FormatError("checkpoint tensor table does not match the model layout");
  }
  if (expected && !(*expected == ckpt.config)) {
    throw DimensionError("checkpoint config differs from the expected model config");
  }
  return ckpt;
}

}  // namespace gntm
