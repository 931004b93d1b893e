#include "chordbench/checkpoint.h"

#include "chordbench/annotations.h"
#include "chordbench/binary_io.h"
#include "chordbench/error.h"

namespace chordbench {

namespace {
constexpr std::string_view kMagic = "CBCKPT01";
constexpr std::uint32_t kVersion = 1;
}  // namespace

template <typename T>
void write_checkpoint(const LabelerParams<T>& params, const NormStats& norm, const std::filesystem::path& path) {
  const LabelerConfig& c = params.config;
  c.validate();
  if (params.values.size() != parameter_count(c)) {
    throw InvalidArgument("write_checkpoint: parameter count does not match config");
  }
  std::string out(kMagic);
  binary::put_u32(out, kVersion);
  binary::put_u32(out, sizeof(T));
  for (std::size_t v : {c.input_dim, c.model_dim, c.n_layers, c.n_heads, c.ff_dim, c.context_frames, c.n_classes}) {
    binary::put_u64(out, v);
  }
  binary::put_u64(out, c.seed);
  binary::put_f64(out, norm.mean);
  binary::put_f64(out, norm.std);
  const auto layout = parameter_layout(c);
  binary::put_u32(out, static_cast<std::uint32_t>(layout.size()));
  for (const auto& slot : layout) {
    binary::put_u32(out, static_cast<std::uint32_t>(slot.name.size()));
    out += slot.name;
    binary::put_u64(out, slot.rows);
    binary::put_u64(out, slot.cols);
    for (std::size_t i = 0; i < slot.size(); ++i) {
      const T v = params.values[slot.offset + i];
      if constexpr (sizeof(T) == 4) {
        binary::put_f32(out, v);
      } else {
        binary::put_f64(out, v);
      }
    }
  }
  write_text_file(path, out);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  const std::string data = read_text_file(path);
  const std::string where = path.string();
  binary::Reader in(data, where);
  if (in.bytes(kMagic.size()) != kMagic) throw ParseError(where + ": not a checkpoint file");
  if (in.u32() != kVersion) throw ParseError(where + ": unsupported checkpoint version");
  Checkpoint ck;
  ck.scalar_bytes = static_cast<int>(in.u32());
  if (ck.scalar_bytes != 4 && ck.scalar_bytes != 8) throw ParseError(where + ": bad scalar width");
  LabelerConfig c;
  c.input_dim = in.u64();
  c.model_dim = in.u64();
  c.n_layers = in.u64();
  c.n_heads = in.u64();
  c.ff_dim = in.u64();
  c.context_frames = in.u64();
  c.n_classes = in.u64();
  c.seed = in.u64();
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(where + ": " + e.what());
  }
  ck.norm.mean = in.f64();
  ck.norm.std = in.f64();
  ck.params = LabelerParams<double>::zeros(c);
  const auto layout = parameter_layout(c);
  if (in.u32() != layout.size()) throw ParseError(where + ": tensor count does not match config");
  for (const auto& slot : layout) {
    const std::uint32_t len = in.u32();
    const std::string name(in.bytes(len));
    if (name != slot.name) throw ParseError(where + ": expected tensor '" + slot.name + "', found '" + name + "'");
    const std::uint64_t rows = in.u64();
    const std::uint64_t cols = in.u64();
    if (rows != slot.rows || cols != slot.cols) throw ParseError(where + ": shape mismatch for " + name);
    for (std::size_t i = 0; i < slot.size(); ++i) {
      ck.params.values[slot.offset + i] = ck.scalar_bytes == 4 ? in.f32() : in.f64();
    }
  }
  if (!in.at_end()) throw ParseError(where + ": trailing bytes");
  return ck;
}

template void write_checkpoint(const LabelerParams<float>&, const NormStats&, const std::filesystem::path&);
template void write_checkpoint(const LabelerParams<double>&, const NormStats&, const std::filesystem::path&);

}  // namespace chordbench
