#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chordbench/annotations.h"
#include "chordbench/config_file.h"
#include "chordbench/features.h"
#include "chordbench/labeler.h"

namespace chordbench {

/// One recording. Several performances of a song share its song_id.
struct SongEntry {
  std::string song_id;
  std::string performance_id;
  std::string dataset;
  std::string audio_path;
  std::string lab_path;

  friend bool operator==(const SongEntry&, const SongEntry&) = default;
};

enum class FoldOrder {
  kShuffled,
  /// Songs in sorted order, fold f holding the f-th contiguous block.
  kContiguous,
};

/// Song-level fold assignment.
struct FoldPlan {
  int k = 6;
  std::uint64_t seed = 0;
  std::map<std::string, int> fold_of_song;

  int fold_of(const SongEntry& entry) const;
  std::vector<std::string> songs_in_fold(int fold) const;
};

inline constexpr int kDefaultFolds = 6;
inline constexpr std::size_t kDefaultQuota = 192;

/// Sorts distinct song ids, shuffles them with `seed` (unless contiguous),
/// and deals consecutive blocks to folds so sizes differ by at most one.
FoldPlan make_folds(std::span<const SongEntry> songs, std::uint64_t seed, FoldOrder order = FoldOrder::kShuffled,
                    int k = kDefaultFolds);

/// Resizes every dataset to `quota` entries: larger ones are subsampled,
/// smaller ones repeated whole, with a seeded sample filling any remainder.
std::map<std::string, std::vector<SongEntry>> balance_datasets(
    const std::map<std::string, std::vector<SongEntry>>& datasets, std::uint64_t seed,
    std::size_t quota = kDefaultQuota);

enum class ModelKind { kTemplate, kLabeler };

struct ExperimentConfig {
  int id = 0;
  std::string description;
  std::vector<std::string> train_datasets;
  ModelKind model = ModelKind::kTemplate;
  std::vector<std::string> eval_datasets;
  bool balance = false;
  std::size_t quota = kDefaultQuota;
  std::uint64_t seed = 1;
  int folds = kDefaultFolds;
  FoldOrder fold_order = FoldOrder::kShuffled;
  bool augment = false;
  LabelerConfig labeler;
  TrainHyperparams training;

  void validate() const;
};

/// Experiment sections are named `experiment.<id>`; shared defaults may sit
/// in an optional `[defaults]` section.
std::vector<ExperimentConfig> parse_experiments(const ConfigFile& file);

/// Labeler shape and training settings from `[labeler]` and `[training]`.
void apply_labeler_settings(const ConfigSection& labeler, LabelerConfig& config);
void apply_training_settings(const ConfigSection& training, TrainHyperparams& hyper);

/// A loaded recording: log-CQT features, its reference track, frame targets.
struct TrackData {
  SongEntry entry;
  FeatureMatrix features;
  SegmentTrack reference;
  FrameLabels frame_labels;
};

class Recognizer {
 public:
  virtual ~Recognizer() = default;
  virtual void fit(std::span<const TrackData> training) = 0;
  virtual SegmentTrack predict(const TrackData& track) = 0;
  /// Stores fitted state into `dir`; a no-op for training-free models.
  virtual void save(const std::filesystem::path& dir) const { (void)dir; }
};

/// Data access and model construction used by run_experiment.
class Pipeline {
 public:
  virtual ~Pipeline() = default;
  virtual std::vector<SongEntry> songs(const std::string& dataset) = 0;
  virtual TrackData load(const SongEntry& entry) = 0;
  virtual std::unique_ptr<Recognizer> make_recognizer(const ExperimentConfig& config) = 0;
};

inline constexpr int kSummaryFold = -1;

/// Scores in percent, rounded to two decimals. Per-fold rows carry the fold
/// score in `mean` and zero `std`; summary rows use fold kSummaryFold.
struct ResultRow {
  int experiment = 0;
  std::string dataset;
  std::string metric;
  int fold = kSummaryFold;
  double mean = 0.0;
  double std = 0.0;

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

/// Metrics scored by the harness, in column order.
const std::vector<std::string>& harness_metrics();

double round_percent(double value);

/// Summary rows (mean and population std over folds) from per-fold rows.
std::vector<ResultRow> summarize(std::span<const ResultRow> fold_rows);

/// Runs every fold, skipping folds whose <out>/<id>/<fold>/scores.csv
/// already exists. Returns per-fold rows followed by summary rows.
std::vector<ResultRow> run_experiment(const ExperimentConfig& config, Pipeline& pipeline,
                                      const std::optional<std::filesystem::path>& out_dir = std::nullopt);

std::string format_results_csv(std::span<const ResultRow> rows);
std::vector<ResultRow> parse_results_csv(std::string_view text);

/// Summary rows as `mean ± std` cells, one line per experiment, one column
/// per dataset and metric; the highest mean in each column gets a `*`.
std::string format_report_table(std::span<const ResultRow> rows);

/// Writes <dir>/summary.csv and <dir>/summary.txt.
void emit_report(std::span<const ResultRow> rows, const std::filesystem::path& dir);

}  // namespace chordbench
