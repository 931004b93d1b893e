#include "chordbench/feature_cache.h"

#include "chordbench/annotations.h"
#include "chordbench/binary_io.h"
#include "chordbench/error.h"

namespace chordbench {

namespace {
constexpr std::string_view kMagic = "CBFEAT01";
constexpr std::uint32_t kVersion = 1;
}  // namespace

void write_feature_cache(const CachedFeatures& entry, const std::filesystem::path& path) {
  const FeatureMatrix& f = entry.features;
  if (entry.labels && entry.labels->classes.size() != f.frames) {
    throw InvalidArgument("write_feature_cache: label count does not match frame count");
  }
  std::string out(kMagic);
  binary::put_u32(out, kVersion);
  binary::put_u32(out, static_cast<std::uint32_t>(f.kind));
  binary::put_u32(out, static_cast<std::uint32_t>(f.frames));
  binary::put_u32(out, static_cast<std::uint32_t>(f.bins));
  binary::put_u32(out, static_cast<std::uint32_t>(f.hop_samples));
  binary::put_u32(out, static_cast<std::uint32_t>(f.sample_rate_hz));
  binary::put_f64(out, f.origin_s);
  binary::put_u32(out, entry.labels ? 1u : 0u);
  for (double v : f.values) binary::put_f32(out, static_cast<float>(v));
  if (entry.labels) {
    for (auto c : entry.labels->classes) out += static_cast<char>(c.index());
  }
  write_text_file(path, out);
}

CachedFeatures read_feature_cache(const std::filesystem::path& path) {
  const std::string data = read_text_file(path);
  binary::Reader in(data, path.string());
  if (in.bytes(kMagic.size()) != kMagic) throw ParseError(path.string() + ": not a feature cache file");
  if (in.u32() != kVersion) throw ParseError(path.string() + ": unsupported cache version");
  const std::uint32_t kind = in.u32();
  if (kind > static_cast<std::uint32_t>(BinKind::kChroma12)) throw ParseError(path.string() + ": bad bin kind");
  const std::uint32_t frames = in.u32();
  const std::uint32_t bins = in.u32();
  const std::uint32_t hop = in.u32();
  const std::uint32_t rate = in.u32();
  CachedFeatures entry;
  entry.features = FeatureMatrix(frames, bins, static_cast<BinKind>(kind), static_cast<int>(hop),
                                 static_cast<int>(rate));
  entry.features.origin_s = in.f64();
  const bool has_labels = in.u32() != 0;
  for (double& v : entry.features.values) v = in.f32();
  if (has_labels) {
    FrameLabels labels;
    const auto raw = in.bytes(frames);
    for (char c : raw) {
      const int idx = static_cast<unsigned char>(c);
      if (idx >= MajMinClass::kCount) throw ParseError(path.string() + ": bad class index in labels");
      labels.classes.emplace_back(idx);
    }
    entry.labels = std::move(labels);
  }
  if (!in.at_end()) throw ParseError(path.string() + ": trailing bytes");
  return entry;
}

}  // namespace chordbench
