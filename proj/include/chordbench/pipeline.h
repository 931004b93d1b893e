#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "chordbench/checkpoint.h"
#include "chordbench/harness.h"
#include "chordbench/wav.h"

namespace chordbench {

/// Brings audio to the analysis rate; 44.1 kHz input is low-pass filtered
/// and decimated by two. Other rates are rejected.
AudioBuffer to_analysis_rate(const AudioBuffer& audio);

/// Log-magnitude constant-Q features of a recording.
FeatureMatrix extract_features(const AudioBuffer& audio);

/// Features from a WAV file or a feature cache file (any other extension).
FeatureMatrix load_features(const std::filesystem::path& path);

/// Chroma-template baseline; needs no training.
class TemplateRecognizer : public Recognizer {
 public:
  void fit(std::span<const TrackData> training) override { (void)training; }
  SegmentTrack predict(const TrackData& track) override;
  FrameLabels predict_frames(const FeatureMatrix& features) const;
};

/// Self-attention labeler trained on z-scored log-CQT windows.
class LabelerRecognizer : public Recognizer {
 public:
  LabelerRecognizer(LabelerConfig config, TrainHyperparams hyper, bool augment = false);
  static LabelerRecognizer from_checkpoint(const Checkpoint& checkpoint);

  void fit(std::span<const TrackData> training) override;
  SegmentTrack predict(const TrackData& track) override;
  FrameLabels predict_frames(const FeatureMatrix& features) const;
  /// Writes model.ckpt and train_report.json.
  void save(const std::filesystem::path& dir) const override;

  const TrainReport& report() const { return report_; }
  const LabelerParams<float>& params() const { return params_; }
  const NormStats& norm() const { return norm_; }

 private:
  LabelerConfig config_;
  TrainHyperparams hyper_;
  bool augment_ = false;
  bool fitted_ = false;
  LabelerParams<float> params_;
  NormStats norm_;
  TrainReport report_;
};

/// Share of training songs held out to drive early stopping.
inline constexpr double kValidationShare = 0.1;

/// Training windows for the labeler from loaded tracks; with `augment`
/// every pitch shift in [-5, 6] is added with transposed targets.
std::vector<LabeledSequence> labeler_sequences(std::span<const TrackData> tracks, const NormStats& norm,
                                               std::size_t context_frames, bool augment);

/// Datasets stored as <root>/<name>/manifest.jsonl next to their WAV and
/// lab files. Features are computed once and kept in memory.
class DirectoryPipeline : public Pipeline {
 public:
  explicit DirectoryPipeline(std::filesystem::path data_root);

  std::vector<SongEntry> songs(const std::string& dataset) override;
  TrackData load(const SongEntry& entry) override;
  std::unique_ptr<Recognizer> make_recognizer(const ExperimentConfig& config) override;

 private:
  std::filesystem::path root_;
  std::map<std::string, FeatureMatrix> features_;
};

/// Normalized reference track from a lab file.
SegmentTrack load_reference(const std::filesystem::path& lab_path);

}  // namespace chordbench
