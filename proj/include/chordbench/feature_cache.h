#pragma once

#include <filesystem>
#include <optional>

#include "chordbench/features.h"

namespace chordbench {

/// One cached feature file: a matrix and, optionally, per-frame labels.
struct CachedFeatures {
  FeatureMatrix features;
  std::optional<FrameLabels> labels;
};

/// Flat little-endian container; values stored as 32-bit floats.
void write_feature_cache(const CachedFeatures& entry, const std::filesystem::path& path);
CachedFeatures read_feature_cache(const std::filesystem::path& path);

}  // namespace chordbench
