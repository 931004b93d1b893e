#include "chordbench/synth.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include <json.hpp>

#include "chordbench/error.h"
#include "chordbench/rng.h"

namespace chordbench {

// Progression models --------------------------------------------------------------

void ProgressionModel::validate() const {
  if (!(min_duration_s > 0.0) || !(max_duration_s >= min_duration_s)) {
    throw InvalidArgument("ProgressionModel: duration range must satisfy 0 < min <= max");
  }
  double init_sum = 0.0;
  for (double p : initial) {
    if (p < 0.0) throw InvalidArgument("ProgressionModel: negative initial probability");
    init_sum += p;
  }
  if (std::abs(init_sum - 1.0) > 1e-9) throw InvalidArgument("ProgressionModel: initial distribution must sum to 1");
  for (int a = 0; a < MajMinClass::kCount; ++a) {
    if (transition[a][a] != 0.0) throw InvalidArgument("ProgressionModel: self-transition probability must be 0");
    double sum = 0.0;
    for (double p : transition[a]) {
      if (p < 0.0) throw InvalidArgument("ProgressionModel: negative transition probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw InvalidArgument("ProgressionModel: row " + std::to_string(a) + " does not sum to 1");
    }
  }
}

ProgressionModel model_from_stats(const TransitionMatrix& matrix, const OccurrenceHistogram& histogram) {
  if (matrix.total() == 0) throw InvalidArgument("model_from_stats: transition matrix is all zero");
  constexpr int n = MajMinClass::kCount;
  ProgressionModel model;
  for (int a = 0; a < n; ++a) {
    double row_sum = 0.0;
    for (int b = 0; b < n; ++b) {
      if (b != a) row_sum += static_cast<double>(matrix.counts[a][b]);
    }
    for (int b = 0; b < n; ++b) {
      if (b == a) continue;
      model.transition[a][b] = row_sum > 0.0
                                   ? (static_cast<double>(matrix.counts[a][b]) + kTransitionSmoothing) /
                                         (row_sum + kTransitionSmoothing * (n - 1))
                                   : 1.0 / (n - 1);
    }
  }
  const double total = static_cast<double>(histogram.total());
  for (int a = 0; a < n; ++a) {
    model.initial[a] = total > 0.0 ? static_cast<double>(histogram.counts[a]) / total : 1.0 / n;
  }
  return model;
}

ProgressionModel uniform_model() {
  TransitionMatrix m;
  OccurrenceHistogram h;
  for (int a = 0; a < MajMinClass::kCount; ++a) {
    h.counts[a] = 1;
    for (int b = 0; b < MajMinClass::kCount; ++b) m.counts[a][b] = a == b ? 0 : 1;
  }
  return model_from_stats(m, h);
}

ProgressionModel pop_model() {
  // Scale-degree progressions as (semitones above tonic, minor?) pairs.
  struct Step {
    int offset;
    bool minor;
  };
  const std::vector<std::vector<Step>> progressions = {
      {{0, false}, {5, false}, {7, false}},                 // I IV V
      {{0, false}, {7, false}, {9, true}, {5, false}},      // I V vi IV
      {{9, true}, {5, false}, {0, false}, {7, false}},      // vi IV I V
      {{0, false}, {9, true}, {5, false}, {7, false}},      // I vi IV V
      {{2, true}, {7, false}, {0, false}},                  // ii V I
      {{0, false}, {5, false}, {0, false}, {7, false}},     // I IV I V
      {{0, true}, {5, true}, {7, false}},                   // i iv V
      {{0, true}, {8, false}, {3, false}, {10, false}},     // i bVI bIII bVII
  };
  TransitionMatrix m;
  auto cls = [](int key, Step s) {
    const PitchClass root = PitchClass::wrap(key + s.offset);
    return (s.minor ? MajMinClass::minor(root) : MajMinClass::major(root)).index();
  };
  for (int key = 0; key < 12; ++key) {
    for (const auto& prog : progressions) {
      for (std::size_t i = 0; i < prog.size(); ++i) {
        const int a = cls(key, prog[i]);
        const int b = cls(key, prog[(i + 1) % prog.size()]);
        if (a != b) m.counts[a][b] += 4;
      }
      // Songs enter from and fall back to silence on the tonic.
      m.counts[MajMinClass::kNoChord][cls(key, prog.front())] += 1;
      m.counts[cls(key, prog.back())][MajMinClass::kNoChord] += 1;
    }
  }
  OccurrenceHistogram h;
  for (int a = 0; a < MajMinClass::kCount; ++a) {
    for (int b = 0; b < MajMinClass::kCount; ++b) h.counts[a] += m.counts[a][b];
  }
  return model_from_stats(m, h);
}

SegmentTrack sample_progression(const ProgressionModel& model, double length_s, std::uint64_t seed) {
  model.validate();
  if (!(length_s > 0.0)) throw InvalidArgument("sample_progression: length must be positive");
  Rng rng(seed);
  SegmentTrack track;
  auto state = static_cast<int>(rng.categorical(model.initial));
  double t = 0.0;
  while (t < length_s) {
    const double d = rng.uniform(model.min_duration_s, model.max_duration_s);
    const double end = std::min(t + d, length_s);
    track.segments.push_back({t, end, label_of(MajMinClass(state))});
    t = end;
    state = static_cast<int>(rng.categorical(model.transition[state]));
  }
  return track;
}

// Rendering ------------------------------------------------------------------------

void SynthSpec::validate() const {
  if (n_tracks < 1) throw InvalidArgument("SynthSpec: n_tracks must be at least 1");
  if (!(track_length_s >= 10.0)) throw InvalidArgument("SynthSpec: track_length_s must be at least 10 s");
  if (sample_rate_hz != 22050 && sample_rate_hz != 44100) {
    throw InvalidArgument("SynthSpec: unsupported sample rate " + std::to_string(sample_rate_hz) +
                          " (22050 or 44100)");
  }
  if (octaves.empty()) throw InvalidArgument("SynthSpec: no octaves");
  if (performances < 1) throw InvalidArgument("SynthSpec: performances must be at least 1");
}

SegmentTrack snap_to_samples(const SegmentTrack& track, int sample_rate_hz) {
  SegmentTrack out;
  out.source_id = track.source_id;
  for (const auto& s : track.segments) {
    const double a = std::round(s.start_s * sample_rate_hz) / sample_rate_hz;
    const double b = std::round(s.end_s * sample_rate_hz) / sample_rate_hz;
    if (b > a) out.segments.push_back({a, b, s.label});
  }
  return out;
}

AudioBuffer render_audio(const SegmentTrack& track, const SynthSpec& spec) {
  if (spec.sample_rate_hz != 22050 && spec.sample_rate_hz != 44100) {
    throw InvalidArgument("render_audio: unsupported sample rate " + std::to_string(spec.sample_rate_hz));
  }
  validate(track);
  const int sr = spec.sample_rate_hz;
  AudioBuffer audio;
  audio.sample_rate_hz = sr;
  audio.samples.assign(static_cast<std::size_t>(std::lround(track.end() * sr)), 0.0);
  const double fade = std::max(1.0, std::round(0.010 * sr));

  for (const auto& seg : track.segments) {
    const PitchClassSet pcs = pitch_class_set(seg.label);
    if (pcs.empty()) continue;
    const auto a = static_cast<std::size_t>(std::lround(seg.start_s * sr));
    const auto b = std::min(static_cast<std::size_t>(std::lround(seg.end_s * sr)), audio.samples.size());
    std::vector<double> freqs;
    for (int pc = 0; pc < 12; ++pc) {
      if (!pcs.contains(PitchClass::wrap(pc))) continue;
      for (int octave : spec.octaves) {
        const int midi = 12 * (octave + 1) + pc;
        const double f = 440.0 * std::exp2((midi - 69) / 12.0);
        if (f >= sr / 2.0) throw InvalidArgument("render_audio: partial above Nyquist");
        freqs.push_back(f);
      }
    }
    for (std::size_t n = a; n < b; ++n) {
      const double env = std::min({1.0, (static_cast<double>(n - a) + 0.5) / fade,
                                   (static_cast<double>(b - n) - 0.5) / fade});
      double v = 0.0;
      for (double f : freqs) v += std::sin(2.0 * std::numbers::pi * f * static_cast<double>(n) / sr);
      audio.samples[n] += env * v;
    }
  }

  double peak = 0.0;
  for (double v : audio.samples) peak = std::max(peak, std::abs(v));
  if (peak > 0.0) {
    const double gain = 0.9 / peak;
    for (double& v : audio.samples) v *= gain;
  }
  return audio;
}

// Dataset emission -----------------------------------------------------------------

std::string format_manifest_line(const ManifestEntry& e) {
  nlohmann::ordered_json j;
  j["id"] = e.id;
  j["song_id"] = e.song_id;
  j["performance_id"] = e.performance_id;
  j["path"] = e.audio_path;
  j["lab"] = e.lab_path;
  j["duration"] = e.duration_s;
  j["seed"] = e.seed;
  return j.dump();
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  std::vector<ManifestEntry> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    const std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ManifestEntry e;
      e.id = j.at("id").get<std::string>();
      e.song_id = j.value("song_id", e.id);
      e.performance_id = j.value("performance_id", std::string());
      e.audio_path = j.at("path").get<std::string>();
      e.lab_path = j.value("lab", std::string());
      e.duration_s = j.value("duration", 0.0);
      e.seed = j.value("seed", std::uint64_t{0});
      out.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError(path.string() + ": line " + std::to_string(line_no) + ": " + ex.what());
    }
  }
  return out;
}

std::vector<ManifestEntry> emit_dataset(const SynthSpec& spec, const ProgressionModel& model,
                                        const std::filesystem::path& out_dir) {
  spec.validate();
  model.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create '" + out_dir.string() + "': " + ec.message());

  std::vector<ManifestEntry> entries;
  std::string manifest;
  for (int i = 0; i < spec.n_tracks; ++i) {
    char song_id[128];
    std::snprintf(song_id, sizeof song_id, "%s_%04d", spec.prefix.c_str(), i);
    const std::uint64_t seed = derive_seed(spec.seed, static_cast<std::uint64_t>(i));
    SegmentTrack track = sample_progression(model, spec.track_length_s, seed);
    track = normalize(snap_to_samples(track, spec.sample_rate_hz), TimeSpan{0.0, spec.track_length_s});

    for (int p = 0; p < spec.performances; ++p) {
      ManifestEntry e;
      e.song_id = song_id;
      e.performance_id = spec.performances > 1 ? "p" + std::to_string(p) : "";
      e.id = spec.performances > 1 ? e.song_id + "_" + e.performance_id : e.song_id;
      e.seed = seed;
      SynthSpec rendition = spec;
      for (int& o : rendition.octaves) o += p;
      track.source_id = e.id;
      const AudioBuffer audio = render_audio(track, rendition);
      e.audio_path = e.id + ".wav";
      e.lab_path = e.id + ".lab";
      e.duration_s = audio.duration_s();
      write_wav(audio, out_dir / e.audio_path);
      write_lab(track, out_dir / e.lab_path);
      manifest += format_manifest_line(e) + "\n";
      entries.push_back(std::move(e));
    }
  }
  write_text_file(out_dir / "manifest.jsonl", manifest);
  return entries;
}

}  // namespace chordbench
