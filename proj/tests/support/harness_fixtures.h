#pragma once

#include <cstdio>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "chordbench/error.h"
#include "chordbench/harness.h"

namespace testing_support {

using namespace chordbench;

inline std::vector<SongEntry> make_songs(const std::string& dataset, int n_songs, int performances = 1,
                                         const std::string& prefix = "song") {
  std::vector<SongEntry> out;
  char id[64];
  for (int s = 1; s <= n_songs; ++s) {
    std::snprintf(id, sizeof id, "%s-%02d", prefix.c_str(), s);
    for (int p = 0; p < performances; ++p) out.push_back({id, "p" + std::to_string(p), dataset, "", ""});
  }
  return out;
}

/// Song index parsed from the trailing number of a make_songs id.
inline int song_number(const std::string& song_id) { return std::stoi(song_id.substr(song_id.rfind('-') + 1)); }

/// Every third song is C:maj, the rest A:min; song n lasts 10 + n seconds.
inline SegmentTrack mock_reference(const SongEntry& e) {
  const int n = song_number(e.song_id);
  SegmentTrack t;
  t.source_id = e.song_id;
  t.segments = {{0.0, 10.0 + n, parse_harte(n % 3 == 0 ? "C:maj" : "A:min")}};
  return t;
}

enum class MockModel { kPerfect, kConstantC };

class MockRecognizer : public Recognizer {
 public:
  MockRecognizer(MockModel model, std::vector<std::size_t>* fits) : model_(model), fits_(fits) {}
  void fit(std::span<const TrackData> training) override { fits_->push_back(training.size()); }
  SegmentTrack predict(const TrackData& track) override {
    if (model_ == MockModel::kPerfect) return track.reference;
    SegmentTrack t = track.reference;
    for (auto& s : t.segments) s.label = parse_harte("C:maj");
    return t;
  }

 private:
  MockModel model_;
  std::vector<std::size_t>* fits_;
};

class MockPipeline : public Pipeline {
 public:
  std::map<std::string, std::vector<SongEntry>> datasets;
  MockModel model = MockModel::kPerfect;
  std::vector<std::size_t> fits;
  std::size_t loads = 0;
  std::string fail_on;

  std::vector<SongEntry> songs(const std::string& dataset) override {
    auto it = datasets.find(dataset);
    if (it == datasets.end()) throw InvalidArgument("unknown dataset " + dataset);
    return it->second;
  }
  TrackData load(const SongEntry& entry) override {
    if (entry.song_id == fail_on) throw IoError("cannot read " + entry.song_id);
    ++loads;
    TrackData t;
    t.entry = entry;
    t.reference = mock_reference(entry);
    return t;
  }
  std::unique_ptr<Recognizer> make_recognizer(const ExperimentConfig&) override {
    return std::make_unique<MockRecognizer>(model, &fits);
  }
};

}  // namespace testing_support
