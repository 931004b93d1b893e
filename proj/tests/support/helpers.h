#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "chordbench/annotations.h"
#include "chordbench/chord.h"
#include "oracles.h"

namespace testing_support {

inline chordbench::SegmentTrack to_track(const std::vector<oracle::MsSegment>& segs, std::string id = {}) {
  chordbench::SegmentTrack t;
  t.source_id = std::move(id);
  for (const auto& s : segs) {
    t.segments.push_back({s.start_ms / 1000.0, s.end_ms / 1000.0, chordbench::parse_harte(s.label)});
  }
  return t;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("chordbench_" + tag + "_" + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing_support
