#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "chordbench/annotations.h"
#include "chordbench/chord.h"
#include "chordbench/wav.h"

namespace chordbench {

enum class BinKind : std::uint32_t {
  kCqtMagnitude = 0,
  kCqtLog = 1,
  kChroma24 = 2,
  kChroma12 = 3,
};

/// Frames x bins matrix, row-major. Frame i starts at
/// origin_s + i * hop_samples / sample_rate_hz.
struct FeatureMatrix {
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::vector<double> values;
  int hop_samples = 2048;
  int sample_rate_hz = 22050;
  BinKind kind = BinKind::kCqtMagnitude;
  double origin_s = 0.0;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t n_frames, std::size_t n_bins, BinKind bin_kind, int hop, int rate)
      : frames(n_frames), bins(n_bins), values(n_frames * n_bins, 0.0), hop_samples(hop),
        sample_rate_hz(rate), kind(bin_kind) {}

  double& at(std::size_t frame, std::size_t bin) { return values[frame * bins + bin]; }
  double at(std::size_t frame, std::size_t bin) const { return values[frame * bins + bin]; }
  std::span<double> row(std::size_t frame) { return {values.data() + frame * bins, bins}; }
  std::span<const double> row(std::size_t frame) const { return {values.data() + frame * bins, bins}; }
  double frame_period_s() const { return static_cast<double>(hop_samples) / sample_rate_hz; }
  double frame_time(std::size_t frame) const { return origin_s + frame * frame_period_s(); }
  /// Metadata copy with no rows.
  FeatureMatrix empty_like(std::size_t n_frames, std::size_t n_bins) const;
};

// Constant-Q analysis parameters.
inline constexpr int kCqtSampleRate = 22050;
inline constexpr int kCqtHop = 2048;
inline constexpr int kCqtBinsPerOctave = 24;
inline constexpr int kCqtOctaves = 6;
inline constexpr int kCqtBins = kCqtBinsPerOctave * kCqtOctaves;
/// C1 in twelve-tone equal temperament (A4 = 440 Hz).
inline constexpr double kCqtMinFrequency = 32.703195662574829;
/// Amplitude floor added before the logarithm.
inline constexpr double kLogEpsilon = 1e-6;

double cqt_bin_frequency(int bin);
double cqt_quality_factor();
/// Analysis window length in samples for one bin.
std::size_t cqt_window_length(int bin);
/// Shortest input accepted by cqt().
std::size_t cqt_min_samples();

/// Direct-projection constant-Q magnitudes: 144 bins, hop 2048, Hann
/// windows centred on each frame's midpoint, normalized so a unit-amplitude
/// sinusoid at a bin centre yields about 0.5.
FeatureMatrix cqt(const AudioBuffer& audio);

/// True when frame `frame`'s longest window lies fully inside the audio.
bool cqt_frame_is_interior(std::size_t frame, std::size_t n_samples);

/// ln(magnitude + 1e-6), elementwise.
FeatureMatrix log_amplitude(const FeatureMatrix& features);

struct NormStats {
  double mean = 0.0;
  double std = 1.0;
};

struct BinNormStats {
  std::vector<double> mean;
  std::vector<double> std;
};

/// Single scalar mean and standard deviation over every value of every matrix.
NormStats zscore_fit(std::span<const FeatureMatrix> training);
BinNormStats zscore_fit_per_bin(std::span<const FeatureMatrix> training);
FeatureMatrix zscore_apply(const FeatureMatrix& features, const NormStats& stats);
FeatureMatrix zscore_apply(const FeatureMatrix& features, const BinNormStats& stats);

// Ten-second windows overlapping by five seconds.
inline constexpr std::size_t kWindowFrames = 108;
inline constexpr std::size_t kWindowStride = 54;

struct FeatureWindow {
  FeatureMatrix features;
  std::size_t start_frame = 0;
  /// Rows past this count are zero padding.
  std::size_t valid_frames = 0;
  bool padded() const { return valid_frames < features.frames; }
};

std::vector<FeatureWindow> window_slices(const FeatureMatrix& features,
                                         std::size_t window = kWindowFrames,
                                         std::size_t stride = kWindowStride);

inline constexpr int kMinPitchShift = -5;
inline constexpr int kMaxPitchShift = 6;

/// Moves log-CQT bins up by 2 per semitone; vacated bins get ln(1e-6).
FeatureMatrix pitch_shift_cqt(const FeatureMatrix& features, int semitones);

struct FrameLabels {
  std::vector<MajMinClass> classes;
};

/// Frame i takes the class of the segment holding its midpoint,
/// (i + 0.5) * hop / rate; N past the end of the track.
FrameLabels align_labels(const SegmentTrack& track, const FeatureMatrix& features);

/// Each class moved by `semitones` within its family.
FrameLabels transpose_labels(const FrameLabels& labels, int semitones);

// Precomputed treble/bass chroma files ----------------------------------------

/// Rows of "timestamp, 24 chroma values" (comma or whitespace separated).
/// The frame period is inferred from the timestamps and stored at microsecond
/// resolution (sample_rate_hz = 1000000).
FeatureMatrix parse_chroma_text(std::string_view text);
FeatureMatrix read_chroma_file(const std::filesystem::path& path);

inline constexpr std::size_t kSequenceSegments = 100;
inline constexpr std::size_t kSegmentContext = 21;
inline constexpr std::size_t kSegmentHop = 5;
/// Segment j is centred on frame kSegmentHop * j + kSegmentCenterOffset.
inline constexpr std::size_t kSegmentCenterOffset = 2;

struct ChromaSequence {
  FeatureMatrix segments;  // kSequenceSegments x 24
  std::vector<std::size_t> center_frames;  // one per valid segment
  std::size_t valid_segments = 0;
};

/// Mean-pooled 21-frame contexts every 5 frames, grouped into
/// non-overlapping sequences of 100 segments.
std::vector<ChromaSequence> ht_sequences(const FeatureMatrix& chroma);

/// Circular rotation of the treble and bass halves (or of a 12-bin chroma).
FeatureMatrix pitch_shift_chroma(const FeatureMatrix& chroma, int semitones);

}  // namespace chordbench
