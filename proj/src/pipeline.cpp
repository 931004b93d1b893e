#include "chordbench/pipeline.h"

#include <cmath>
#include <numbers>
#include <set>

#include <json.hpp>

#include "chordbench/error.h"
#include "chordbench/feature_cache.h"
#include "chordbench/rng.h"
#include "chordbench/synth.h"
#include "chordbench/templates.h"

namespace chordbench {

namespace fs = std::filesystem;

namespace {

constexpr int kDecimationTaps = 127;
constexpr double kDecimationCutoffHz = 10000.0;

}  // namespace

AudioBuffer to_analysis_rate(const AudioBuffer& audio) {
  if (audio.sample_rate_hz == kCqtSampleRate) return audio;
  if (audio.sample_rate_hz != 2 * kCqtSampleRate) {
    throw InvalidArgument("unsupported sample rate " + std::to_string(audio.sample_rate_hz) + " Hz; expected " +
                          std::to_string(kCqtSampleRate) + " or " + std::to_string(2 * kCqtSampleRate));
  }
  // Blackman-windowed sinc low-pass, then keep every other sample.
  std::vector<double> h(kDecimationTaps);
  const double fc = kDecimationCutoffHz / audio.sample_rate_hz;
  const int mid = kDecimationTaps / 2;
  double sum = 0.0;
  for (int t = 0; t < kDecimationTaps; ++t) {
    const double x = t - mid;
    const double sinc = x == 0 ? 2 * fc : std::sin(2 * std::numbers::pi * fc * x) / (std::numbers::pi * x);
    const double w = 0.42 - 0.5 * std::cos(2 * std::numbers::pi * t / (kDecimationTaps - 1)) +
                     0.08 * std::cos(4 * std::numbers::pi * t / (kDecimationTaps - 1));
    h[t] = sinc * w;
    sum += h[t];
  }
  for (double& v : h) v /= sum;

  AudioBuffer out;
  out.sample_rate_hz = kCqtSampleRate;
  const std::size_t n = audio.samples.size();
  out.samples.resize((n + 1) / 2);
  for (std::size_t j = 0; j < out.samples.size(); ++j) {
    double acc = 0.0;
    for (int t = 0; t < kDecimationTaps; ++t) {
      const std::ptrdiff_t i = static_cast<std::ptrdiff_t>(2 * j) + t - mid;
      if (i >= 0 && i < static_cast<std::ptrdiff_t>(n)) acc += h[t] * audio.samples[static_cast<std::size_t>(i)];
    }
    out.samples[j] = acc;
  }
  return out;
}

FeatureMatrix extract_features(const AudioBuffer& audio) { return log_amplitude(cqt(to_analysis_rate(audio))); }

FeatureMatrix load_features(const fs::path& path) {
  if (path.extension() == ".wav" || path.extension() == ".WAV") return extract_features(read_wav(path));
  FeatureMatrix f = read_feature_cache(path).features;
  if (f.kind != BinKind::kCqtLog) throw InvalidArgument(path.string() + ": expected log-CQT features");
  return f;
}

SegmentTrack load_reference(const fs::path& lab_path) { return normalize(read_lab(lab_path)); }

// Template baseline ---------------------------------------------------------

FrameLabels TemplateRecognizer::predict_frames(const FeatureMatrix& features) const {
  const FeatureMatrix chroma = fold_to_chroma(features);
  return template_predict(chroma, default_templates(track_energy_threshold(chroma)));
}

SegmentTrack TemplateRecognizer::predict(const TrackData& track) {
  const FeatureMatrix& f = track.features;
  SegmentTrack out = classes_to_track(predict_frames(f), f.origin_s, f.frame_period_s(), track.entry.song_id);
  return track.reference.empty() ? out : conform_to_span(out, track.reference.extent());
}

// Self-attention labeler -------------------------------------------------------

std::vector<LabeledSequence> labeler_sequences(std::span<const TrackData> tracks, const NormStats& norm,
                                               std::size_t context_frames, bool augment) {
  std::vector<LabeledSequence> out;
  const std::size_t stride = std::max<std::size_t>(1, context_frames / 2);
  for (const auto& t : tracks) {
    for (int k = augment ? kMinPitchShift : 0; k <= (augment ? kMaxPitchShift : 0); ++k) {
      const FeatureMatrix shifted = k == 0 ? t.features : pitch_shift_cqt(t.features, k);
      const FrameLabels labels = k == 0 ? t.frame_labels : transpose_labels(t.frame_labels, k);
      const FeatureMatrix normalized = zscore_apply(shifted, norm);
      for (const auto& w : window_slices(normalized, context_frames, stride)) out.push_back(make_sequence(w, labels));
    }
  }
  return out;
}

LabelerRecognizer::LabelerRecognizer(LabelerConfig config, TrainHyperparams hyper, bool augment)
    : config_(config), hyper_(hyper), augment_(augment) {
  config_.validate();
}

LabelerRecognizer LabelerRecognizer::from_checkpoint(const Checkpoint& checkpoint) {
  LabelerRecognizer r(checkpoint.params.config, TrainHyperparams{});
  r.params_ = checkpoint.params.cast<float>();
  r.norm_ = checkpoint.norm;
  r.fitted_ = true;
  return r;
}

void LabelerRecognizer::fit(std::span<const TrackData> training) {
  if (training.empty()) throw InvalidArgument("LabelerRecognizer: no training tracks");
  std::vector<FeatureMatrix> features;
  for (const auto& t : training) {
    if (t.frame_labels.classes.size() != t.features.frames) {
      throw InvalidArgument("LabelerRecognizer: track '" + t.entry.song_id + "' has mismatched frame labels");
    }
    features.push_back(t.features);
  }
  norm_ = zscore_fit(features);

  // Hold out whole songs so repeated or paired recordings never straddle
  // the two splits.
  std::set<std::string> ids;
  for (const auto& t : training) ids.insert(t.entry.dataset + "/" + t.entry.song_id);
  std::vector<std::string> order(ids.begin(), ids.end());
  Rng rng(derive_seed(config_.seed, 0x5e1ec7));
  rng.shuffle(std::span<std::string>(order));
  const std::size_t held = order.size() >= 10 ? static_cast<std::size_t>(order.size() * kValidationShare) : 0;
  const std::set<std::string> validation_ids(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(held));

  std::vector<TrackData> train_tracks;
  std::vector<TrackData> validation_tracks;
  for (const auto& t : training) {
    if (validation_ids.count(t.entry.dataset + "/" + t.entry.song_id)) {
      validation_tracks.push_back(t);
    } else {
      train_tracks.push_back(t);
    }
  }
  LabelerDataset data;
  data.train = labeler_sequences(train_tracks, norm_, config_.context_frames, augment_);
  data.validation = labeler_sequences(validation_tracks, norm_, config_.context_frames, false);
  auto result = train<float>(config_, data, hyper_);
  params_ = std::move(result.params);
  report_ = std::move(result.report);
  fitted_ = true;
}

FrameLabels LabelerRecognizer::predict_frames(const FeatureMatrix& features) const {
  if (!fitted_) throw InvalidArgument("LabelerRecognizer: predict before fit");
  return chordbench::predict_frames(params_, zscore_apply(features, norm_));
}

SegmentTrack LabelerRecognizer::predict(const TrackData& track) {
  const FeatureMatrix& f = track.features;
  SegmentTrack out = classes_to_track(predict_frames(f), f.origin_s, f.frame_period_s(), track.entry.song_id);
  return track.reference.empty() ? out : conform_to_span(out, track.reference.extent());
}

void LabelerRecognizer::save(const fs::path& dir) const {
  if (!fitted_) return;
  write_checkpoint(params_, norm_, dir / "model.ckpt");
  nlohmann::ordered_json j;
  j["epochs_run"] = report_.epochs_run;
  j["best_epoch"] = report_.best_epoch;
  j["workers"] = report_.workers;
  j["train_loss"] = report_.train_loss;
  j["validation_loss"] = report_.validation_loss;
  j["train_accuracy"] = report_.train_accuracy;
  j["validation_accuracy"] = report_.validation_accuracy;
  write_text_file(dir / "train_report.json", j.dump(2) + "\n");
}

// Manifest-backed datasets ---------------------------------------------------------

DirectoryPipeline::DirectoryPipeline(fs::path data_root) : root_(std::move(data_root)) {}

std::vector<SongEntry> DirectoryPipeline::songs(const std::string& dataset) {
  const fs::path dir = root_ / dataset;
  const fs::path manifest = dir / "manifest.jsonl";
  if (!fs::exists(manifest)) throw IoError("dataset '" + dataset + "': missing " + manifest.string());
  std::vector<SongEntry> out;
  for (const auto& m : read_manifest(manifest)) {
    out.push_back({m.song_id, m.performance_id, dataset, (dir / m.audio_path).string(), (dir / m.lab_path).string()});
  }
  return out;
}

TrackData DirectoryPipeline::load(const SongEntry& entry) {
  TrackData t;
  t.entry = entry;
  auto it = features_.find(entry.audio_path);
  if (it == features_.end()) it = features_.emplace(entry.audio_path, load_features(entry.audio_path)).first;
  t.features = it->second;
  t.reference = load_reference(entry.lab_path);
  t.frame_labels = align_labels(t.reference, t.features);
  return t;
}

std::unique_ptr<Recognizer> DirectoryPipeline::make_recognizer(const ExperimentConfig& config) {
  if (config.model == ModelKind::kTemplate) return std::make_unique<TemplateRecognizer>();
  return std::make_unique<LabelerRecognizer>(config.labeler, config.training, config.augment);
}

}  // namespace chordbench
