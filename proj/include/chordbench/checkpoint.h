#pragma once

#include <filesystem>

#include "chordbench/features.h"
#include "chordbench/labeler.h"

namespace chordbench {

/// Trained labeler plus the feature normalization it was trained with.
struct Checkpoint {
  LabelerParams<double> params;
  NormStats norm;
  /// Bytes per stored value: 4 or 8.
  int scalar_bytes = 4;
};

/// Writes values at the precision of T.
template <typename T>
void write_checkpoint(const LabelerParams<T>& params, const NormStats& norm, const std::filesystem::path& path);

Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace chordbench
