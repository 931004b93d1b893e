// Command-line front end: annotation conversion, scoring, statistics,
// feature extraction, synthetic data, training, prediction and
// cross-validation runs.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "chordbench/annotations.h"
#include "chordbench/checkpoint.h"
#include "chordbench/config_file.h"
#include "chordbench/error.h"
#include "chordbench/feature_cache.h"
#include "chordbench/harness.h"
#include "chordbench/metrics.h"
#include "chordbench/pipeline.h"
#include "chordbench/stats.h"
#include "chordbench/synth.h"
#include "chordbench/templates.h"

namespace fs = std::filesystem;
using namespace chordbench;

namespace {

SegmentTrack read_annotation(const fs::path& path, const std::string& format, const std::string& notation) {
  std::string fmt = format;
  if (fmt == "auto") {
    const auto ext = path.extension().string();
    fmt = ext == ".csv" ? "csv" : ext == ".arff" ? "arff" : "lab";
  }
  if (fmt == "lab") return read_lab(path);
  if (fmt == "arff") return read_aam_arff(path);
  if (fmt == "csv") {
    return read_winterreise_csv(path, notation == "majmin" ? CsvNotation::kMajMin : CsvNotation::kShorthand);
  }
  throw InvalidArgument("unknown annotation format '" + format + "'");
}

// A single file, or every *.lab file in a directory keyed by stem.
std::vector<std::pair<std::string, fs::path>> collect(const fs::path& path, const std::string& ext) {
  std::vector<std::pair<std::string, fs::path>> out;
  if (fs::is_directory(path)) {
    for (const auto& e : fs::directory_iterator(path)) {
      if (e.is_regular_file() && e.path().extension() == ext) out.emplace_back(e.path().stem().string(), e.path());
    }
    std::sort(out.begin(), out.end());
  } else {
    out.emplace_back(path.stem().string(), path);
  }
  return out;
}

int cmd_convert(const fs::path& in, const fs::path& out, const std::string& from, const std::string& to,
                const std::string& notation) {
  if (to != "lab") throw InvalidArgument("only lab output is supported");
  write_lab(normalize(read_annotation(in, from, notation)), out);
  return 0;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    const std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (!item.empty()) out.push_back(item);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

int cmd_eval(const fs::path& ref, const fs::path& pred, const std::string& metric_list, const fs::path& out) {
  std::vector<ChordMetric> metrics;
  for (const auto& n : split_list(metric_list)) metrics.push_back(metric_by_name(n));
  if (metrics.empty()) throw InvalidArgument("no metrics given");
  const auto refs = collect(ref, ".lab");
  const bool pred_dir = fs::is_directory(pred);
  std::vector<std::vector<TrackScore>> scores(metrics.size());
  std::string csv = "song_id,metric,score,duration_s\n";
  char buf[128];
  for (const auto& [id, path] : refs) {
    const fs::path p = pred_dir ? pred / (id + ".lab") : pred;
    const SegmentTrack r = normalize(read_lab(path));
    const SegmentTrack q = conform_to_span(normalize(read_lab(p)), r.extent());
    for (std::size_t m = 0; m < metrics.size(); ++m) {
      scores[m].push_back(weighted_score(r, q, metrics[m]));
      std::snprintf(buf, sizeof buf, ",%s,%.6f,%.6f\n", metrics[m].name.c_str(), scores[m].back().value,
                    scores[m].back().total_duration_s);
      csv += id + buf;
    }
  }
  if (!out.empty()) write_text_file(out, csv);
  std::printf("%zu tracks\n", refs.size());
  for (std::size_t m = 0; m < metrics.size(); ++m) {
    std::printf("%-8s %6.2f\n", metrics[m].name.c_str(), 100.0 * aggregate_fold(scores[m]));
  }
  return 0;
}

int cmd_stats(const fs::path& labels, const fs::path& occurrences, const fs::path& transitions, bool drop_n,
              bool skip_n) {
  std::vector<SegmentTrack> tracks;
  for (const auto& [id, path] : collect(labels, ".lab")) tracks.push_back(read_lab(path));
  if (tracks.empty()) throw InvalidArgument("no .lab files under " + labels.string());
  StatsOptions opt{drop_n, skip_n};
  if (!occurrences.empty()) export_stats(chord_occurrences(tracks, opt), occurrences);
  if (!transitions.empty()) export_stats(chord_transitions(tracks, opt), transitions);
  std::cout << "counted " << tracks.size() << " tracks\n";
  return 0;
}

// "-5..6" or a single shift.
std::pair<int, int> parse_shift_range(const std::string& text) {
  const auto dots = text.find("..");
  try {
    const int lo = std::stoi(text.substr(0, dots));
    const int hi = dots == std::string::npos ? lo : std::stoi(text.substr(dots + 2));
    if (lo > hi || lo < kMinPitchShift || hi > kMaxPitchShift) throw InvalidArgument("");
    return {lo, hi};
  } catch (const std::exception&) {
    throw InvalidArgument("--aug must be a range within -5..6, got '" + text + "'");
  }
}

std::string shifted_name(const std::string& id, int k) {
  if (k == 0) return id;
  return id + "_s" + (k > 0 ? "+" : "") + std::to_string(k);
}

int cmd_extract(const fs::path& in, const fs::path& labels, const std::string& aug, const fs::path& out) {
  const auto [lo, hi] = parse_shift_range(aug);
  fs::create_directories(out);
  std::size_t written = 0;
  for (const auto& [id, path] : collect(in, ".wav")) {
    const FeatureMatrix base = extract_features(read_wav(path));
    std::optional<FrameLabels> frame_labels;
    if (!labels.empty()) {
      const fs::path lab = fs::is_directory(labels) ? labels / (id + ".lab") : labels;
      frame_labels = align_labels(read_lab(lab), base);
    }
    for (int k = lo; k <= hi; ++k) {
      CachedFeatures entry;
      entry.features = k == 0 ? base : pitch_shift_cqt(base, k);
      if (frame_labels) entry.labels = k == 0 ? *frame_labels : transpose_labels(*frame_labels, k);
      write_feature_cache(entry, out / (shifted_name(id, k) + ".cbf"));
      ++written;
    }
  }
  std::cout << "wrote " << written << " cache files to " << out.string() << "\n";
  return 0;
}

int cmd_synth(const fs::path& out, const std::string& model_name, SynthSpec spec) {
  ProgressionModel model;
  if (model_name == "pop") {
    model = pop_model();
  } else if (model_name == "uniform") {
    model = uniform_model();
  } else {
    const TransitionMatrix matrix = parse_transitions_csv(read_text_file(model_name));
    OccurrenceHistogram histogram;
    for (std::size_t a = 0; a < matrix.counts.size(); ++a) {
      for (auto c : matrix.counts[a]) histogram.counts[a] += c;
    }
    model = model_from_stats(matrix, histogram);
  }
  const auto entries = emit_dataset(spec, model, out);
  std::cout << "wrote " << entries.size() << " recordings to " << out.string() << "\n";
  return 0;
}

int cmd_train(const fs::path& config_path, const fs::path& data, const fs::path& out, bool augment) {
  LabelerConfig config;
  TrainHyperparams hyper;
  if (!config_path.empty()) {
    const ConfigFile file = read_config(config_path);
    if (const auto* s = file.find("labeler")) apply_labeler_settings(*s, config);
    if (const auto* s = file.find("training")) apply_training_settings(*s, hyper);
  }
  std::vector<TrackData> tracks;
  for (const auto& [id, path] : collect(data, ".cbf")) {
    CachedFeatures c = read_feature_cache(path);
    if (!c.labels) throw InvalidArgument(path.string() + ": cache has no labels");
    TrackData t;
    const auto mark = id.rfind("_s");
    const bool shifted = mark != std::string::npos && mark + 2 < id.size() && (id[mark + 2] == '+' || id[mark + 2] == '-');
    t.entry.song_id = shifted ? id.substr(0, mark) : id;
    t.features = std::move(c.features);
    t.frame_labels = std::move(*c.labels);
    tracks.push_back(std::move(t));
  }
  if (tracks.empty()) throw InvalidArgument("no .cbf files under " + data.string());
  config.input_dim = tracks.front().features.bins;
  LabelerRecognizer model(config, hyper, augment);
  model.fit(tracks);
  const NormStats& norm = model.norm();
  write_checkpoint(model.params(), norm, out);
  const auto& r = model.report();
  std::cout << "epochs " << r.epochs_run << ", best " << r.best_epoch << ", train accuracy "
            << r.train_accuracy.back() << " -> " << out.string() << "\n";
  return 0;
}

int cmd_predict(const std::string& model_path, const fs::path& in, const fs::path& out) {
  fs::create_directories(out);
  std::unique_ptr<LabelerRecognizer> labeler;
  TemplateRecognizer templates;
  if (model_path != "template") {
    labeler = std::make_unique<LabelerRecognizer>(LabelerRecognizer::from_checkpoint(read_checkpoint(model_path)));
  }
  std::vector<fs::path> inputs;
  if (fs::is_directory(in)) {
    for (const auto& e : fs::directory_iterator(in)) {
      const auto ext = e.path().extension();
      if (ext == ".wav" || ext == ".cbf") inputs.push_back(e.path());
    }
    std::sort(inputs.begin(), inputs.end());
  } else {
    inputs.push_back(in);
  }
  for (const auto& path : inputs) {
    const FeatureMatrix f = load_features(path);
    const FrameLabels frames = labeler ? labeler->predict_frames(f) : templates.predict_frames(f);
    const SegmentTrack track = classes_to_track(frames, f.origin_s, f.frame_period_s(), path.stem().string());
    write_lab(track, out / (path.stem().string() + ".lab"));
  }
  std::cout << "labeled " << inputs.size() << " recordings into " << out.string() << "\n";
  return 0;
}

int cmd_xval(const fs::path& experiments, const fs::path& data_root, const fs::path& out,
             const std::vector<int>& only) {
  const auto configs = parse_experiments(read_config(experiments));
  DirectoryPipeline pipeline(data_root);
  std::vector<ResultRow> all;
  for (const auto& c : configs) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    std::cout << "experiment " << c.id << (c.description.empty() ? "" : ": " + c.description) << std::endl;
    const auto rows = run_experiment(c, pipeline, out);
    all.insert(all.end(), rows.begin(), rows.end());
  }
  if (all.empty()) throw InvalidArgument("no experiments selected");
  emit_report(all, out);
  std::cout << read_text_file(out / "summary.txt");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chord recognition benchmark tools"};
  app.require_subcommand(1);

  std::string in, out, from = "auto", to = "lab", notation = "shorthand";
  auto* convert = app.add_subcommand("convert", "Convert a lab, CSV or ARFF annotation to a normalized lab file");
  convert->add_option("--in", in, "Input annotation")->required();
  convert->add_option("--out", out, "Output lab file")->required();
  convert->add_option("--from", from, "auto, lab, csv or arff");
  convert->add_option("--to", to, "Output format (lab)");
  convert->add_option("--notation", notation, "CSV chord column: shorthand or majmin");

  std::string ref, pred, metrics = "root,majmin,mirex,ccm";
  auto* eval = app.add_subcommand("eval", "Score predicted lab files against references");
  eval->add_option("--ref", ref, "Reference lab file or directory")->required();
  eval->add_option("--pred", pred, "Predicted lab file or directory")->required();
  eval->add_option("--metrics", metrics, "Comma-separated metrics");
  eval->add_option("--out", out, "Per-track scores CSV");

  std::string occurrences, transitions;
  bool drop_n = false, skip_n = false;
  auto* stats = app.add_subcommand("stats", "Chord occurrence and transition counts");
  stats->add_option("--in", in, "Lab file or directory")->required();
  stats->add_option("--occurrences", occurrences, "Occurrence histogram CSV");
  stats->add_option("--transitions", transitions, "Transition matrix CSV");
  stats->add_flag("--drop-n", drop_n, "Leave N out of the counts");
  stats->add_flag("--skip-n-transitions", skip_n, "Count changes across N as direct transitions");

  std::string labels, aug = "0";
  auto* extract = app.add_subcommand("extract", "Compute log-CQT features into cache files");
  extract->add_option("--in", in, "WAV file or directory")->required();
  extract->add_option("--labels", labels, "Lab file or directory of <id>.lab targets");
  extract->add_option("--aug", aug, "Pitch shifts to write, e.g. -5..6");
  extract->add_option("--out", out, "Output cache directory")->required();

  SynthSpec spec;
  std::string model_name = "pop";
  auto* synth = app.add_subcommand("synth", "Render a synthetic annotated dataset");
  synth->add_option("--out", out, "Output directory")->required();
  synth->add_option("--model", model_name, "pop, uniform, or a transitions CSV");
  synth->add_option("--n", spec.n_tracks, "Number of compositions");
  synth->add_option("--len", spec.track_length_s, "Track length in seconds");
  synth->add_option("--rate", spec.sample_rate_hz, "Sample rate (22050 or 44100)");
  synth->add_option("--seed", spec.seed, "Random seed");
  synth->add_option("--performances", spec.performances, "Renditions per composition");
  synth->add_option("--prefix", spec.prefix, "Recording id prefix");

  std::string config_path, data;
  bool augment = false;
  auto* train_cmd = app.add_subcommand("train", "Train the self-attention labeler on cached features");
  train_cmd->add_option("--config", config_path, "Config file with [labeler] and [training] sections");
  train_cmd->add_option("--data", data, "Directory of labeled .cbf cache files")->required();
  train_cmd->add_option("--out", out, "Output checkpoint")->required();
  train_cmd->add_flag("--augment", augment, "Add pitch-shifted copies (-5..+6 semitones)");

  std::string model_path;
  auto* predict = app.add_subcommand("predict", "Label recordings with a checkpoint or the template baseline");
  predict->add_option("--model", model_path, "Checkpoint path, or 'template'")->required();
  predict->add_option("--in", in, "WAV or cache file, or a directory of them")->required();
  predict->add_option("--out", out, "Output directory for lab files")->required();

  std::string experiments, data_root;
  std::vector<int> only;
  auto* xval = app.add_subcommand("xval", "Run cross-validation experiments");
  xval->add_option("--experiments", experiments, "Experiment config file")->required();
  xval->add_option("--data-root", data_root, "Directory holding one folder per dataset")->required();
  xval->add_option("--out", out, "Results directory")->required();
  xval->add_option("--only", only, "Experiment ids to run")->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    if (*convert) return cmd_convert(in, out, from, to, notation);
    if (*eval) return cmd_eval(ref, pred, metrics, out);
    if (*stats) return cmd_stats(in, occurrences, transitions, drop_n, skip_n);
    if (*extract) return cmd_extract(in, labels, aug, out);
    if (*synth) return cmd_synth(out, model_name, spec);
    if (*train_cmd) return cmd_train(config_path, data, out, augment);
    if (*predict) return cmd_predict(model_path, in, out);
    if (*xval) return cmd_xval(experiments, data_root, out, only);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
