#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "chordbench/annotations.h"
#include "chordbench/stats.h"
#include "chordbench/wav.h"

namespace chordbench {

/// First-order Markov model over the 25 vocabulary classes.
struct ProgressionModel {
  using Row = std::array<double, MajMinClass::kCount>;
  std::array<Row, MajMinClass::kCount> transition{};
  Row initial{};
  double min_duration_s = 1.0;
  double max_duration_s = 4.0;

  /// Throws InvalidArgument unless rows are stochastic with a zero diagonal.
  void validate() const;
};

inline constexpr double kTransitionSmoothing = 0.1;

/// Smoothed row-normalized transition counts; initial distribution
/// proportional to the histogram. Rows with no counts become uniform over
/// the other 24 classes.
ProgressionModel model_from_stats(const TransitionMatrix& matrix, const OccurrenceHistogram& histogram);

/// Transitions between every pair of distinct classes equally likely.
ProgressionModel uniform_model();

/// Pop-style model built from common diatonic progressions in every key.
ProgressionModel pop_model();

/// Markov walk, one uniformly drawn duration per state, truncated at length_s.
SegmentTrack sample_progression(const ProgressionModel& model, double length_s, std::uint64_t seed);

struct SynthSpec {
  int n_tracks = 48;
  double track_length_s = 60.0;
  int sample_rate_hz = 22050;
  std::vector<int> octaves = {3, 4, 5};
  std::uint64_t seed = 7;
  /// Renditions per composition; rendition p lifts every octave by p.
  int performances = 1;
  std::string prefix = "synth";

  void validate() const;
};

/// Sums equal-amplitude sines for each chord pitch class in each octave,
/// with 10 ms linear fades at segment edges and a 0.9 peak. N is silence.
AudioBuffer render_audio(const SegmentTrack& track, const SynthSpec& spec);

/// Moves boundaries onto the sample grid of `sample_rate_hz`.
SegmentTrack snap_to_samples(const SegmentTrack& track, int sample_rate_hz);

struct ManifestEntry {
  std::string id;
  std::string song_id;
  std::string performance_id;
  std::string audio_path;  // relative to the manifest directory
  std::string lab_path;
  double duration_s = 0.0;
  std::uint64_t seed = 0;
};

/// Writes <id>.wav, <id>.lab and manifest.jsonl into out_dir.
std::vector<ManifestEntry> emit_dataset(const SynthSpec& spec, const ProgressionModel& model,
                                        const std::filesystem::path& out_dir);

std::string format_manifest_line(const ManifestEntry& entry);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

}  // namespace chordbench
