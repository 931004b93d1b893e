#include "chordbench/features.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>

#include "chordbench/error.h"

namespace chordbench {

namespace {

struct CqtKernel {
  std::size_t length = 0;
  std::vector<double> re;
  std::vector<double> im;
};

std::size_t max_window_length() {
  // Largest power of two not exceeding two seconds of audio.
  std::size_t n = 1;
  while (n * 2 <= static_cast<std::size_t>(2 * kCqtSampleRate)) n *= 2;
  return n;
}

std::vector<CqtKernel> build_kernels() {
  std::vector<CqtKernel> kernels(kCqtBins);
  for (int k = 0; k < kCqtBins; ++k) {
    CqtKernel& ker = kernels[k];
    ker.length = cqt_window_length(k);
    ker.re.resize(ker.length);
    ker.im.resize(ker.length);
    const double f = cqt_bin_frequency(k);
    const double centre = (static_cast<double>(ker.length) - 1.0) / 2.0;
    double wsum = 0.0;
    std::vector<double> w(ker.length);
    for (std::size_t n = 0; n < ker.length; ++n) {
      w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (n + 0.5) / ker.length);
      wsum += w[n];
    }
    for (std::size_t n = 0; n < ker.length; ++n) {
      const double phase = 2.0 * std::numbers::pi * f * (n - centre) / kCqtSampleRate;
      ker.re[n] = w[n] * std::cos(phase) / wsum;
      ker.im[n] = -w[n] * std::sin(phase) / wsum;
    }
  }
  return kernels;
}

const std::vector<CqtKernel>& kernels() {
  static const std::vector<CqtKernel> k = build_kernels();
  return k;
}

// First sample of a window of `length` centred on frame `frame`'s midpoint.
std::ptrdiff_t window_start(std::size_t frame, std::size_t length) {
  const auto centre = static_cast<std::ptrdiff_t>(frame * kCqtHop + kCqtHop / 2);
  return centre - static_cast<std::ptrdiff_t>(length / 2);
}

double projection_magnitude(const CqtKernel& ker, const double* x, std::size_t count,
                            std::size_t kernel_offset) {
  // Four interleaved accumulators; fixed order keeps results reproducible.
  double re[4] = {0, 0, 0, 0};
  double im[4] = {0, 0, 0, 0};
  const double* kr = ker.re.data() + kernel_offset;
  const double* ki = ker.im.data() + kernel_offset;
  std::size_t n = 0;
  for (; n + 4 <= count; n += 4) {
    for (int l = 0; l < 4; ++l) {
      re[l] += kr[n + l] * x[n + l];
      im[l] += ki[n + l] * x[n + l];
    }
  }
  for (; n < count; ++n) {
    re[0] += kr[n] * x[n];
    im[0] += ki[n] * x[n];
  }
  const double r = (re[0] + re[1]) + (re[2] + re[3]);
  const double i = (im[0] + im[1]) + (im[2] + im[3]);
  return std::hypot(r, i);
}

void require_kind(const FeatureMatrix& f, BinKind kind, const char* op) {
  if (f.kind != kind) throw InvalidArgument(std::string(op) + ": unexpected feature kind");
}

}  // namespace

FeatureMatrix FeatureMatrix::empty_like(std::size_t n_frames, std::size_t n_bins) const {
  FeatureMatrix out(n_frames, n_bins, kind, hop_samples, sample_rate_hz);
  out.origin_s = origin_s;
  return out;
}

double cqt_bin_frequency(int bin) {
  return kCqtMinFrequency * std::exp2(static_cast<double>(bin) / kCqtBinsPerOctave);
}

double cqt_quality_factor() { return 1.0 / (std::exp2(1.0 / kCqtBinsPerOctave) - 1.0); }

std::size_t cqt_window_length(int bin) {
  const auto n = static_cast<std::size_t>(
      std::lround(cqt_quality_factor() * kCqtSampleRate / cqt_bin_frequency(bin)));
  return std::min(n, max_window_length());
}

std::size_t cqt_min_samples() { return cqt_window_length(0); }

bool cqt_frame_is_interior(std::size_t frame, std::size_t n_samples) {
  const std::size_t len = cqt_window_length(0);
  const std::ptrdiff_t start = window_start(frame, len);
  return start >= 0 && static_cast<std::size_t>(start) + len <= n_samples;
}

FeatureMatrix cqt(const AudioBuffer& audio) {
  if (audio.sample_rate_hz != kCqtSampleRate) {
    throw InvalidArgument("cqt: audio must be resampled to " + std::to_string(kCqtSampleRate) +
                          " Hz (got " + std::to_string(audio.sample_rate_hz) + ")");
  }
  const std::size_t n = audio.samples.size();
  if (n < cqt_min_samples()) {
    throw InvalidArgument("cqt: audio has " + std::to_string(n) + " samples; at least " +
                          std::to_string(cqt_min_samples()) + " are required");
  }
  const std::size_t frames = (n + kCqtHop - 1) / kCqtHop;
  FeatureMatrix out(frames, kCqtBins, BinKind::kCqtMagnitude, kCqtHop, kCqtSampleRate);
  const auto& ks = kernels();
  const double* x = audio.samples.data();
  for (std::size_t f = 0; f < frames; ++f) {
    for (int k = 0; k < kCqtBins; ++k) {
      const CqtKernel& ker = ks[k];
      const std::ptrdiff_t start = window_start(f, ker.length);
      const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(start, 0);
      const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(start + static_cast<std::ptrdiff_t>(ker.length),
                                                         static_cast<std::ptrdiff_t>(n));
      double mag = 0.0;
      if (hi > lo) {
        mag = projection_magnitude(ker, x + lo, static_cast<std::size_t>(hi - lo),
                                   static_cast<std::size_t>(lo - start));
      }
      out.at(f, static_cast<std::size_t>(k)) = mag;
    }
  }
  return out;
}

FeatureMatrix log_amplitude(const FeatureMatrix& features) {
  require_kind(features, BinKind::kCqtMagnitude, "log_amplitude");
  FeatureMatrix out = features;
  out.kind = BinKind::kCqtLog;
  for (double& v : out.values) v = std::log(v + kLogEpsilon);
  return out;
}

NormStats zscore_fit(std::span<const FeatureMatrix> training) {
  // Welford's running update.
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t count = 0;
  for (const auto& f : training) {
    for (double v : f.values) {
      ++count;
      const double delta = v - mean;
      mean += delta / static_cast<double>(count);
      m2 += delta * (v - mean);
    }
  }
  if (count < 2) throw InvalidArgument("zscore_fit: need at least two values");
  const double sd = std::sqrt(m2 / static_cast<double>(count));
  if (!(sd > 0.0)) throw NumericError("zscore_fit: zero variance in training features");
  return {mean, sd};
}

BinNormStats zscore_fit_per_bin(std::span<const FeatureMatrix> training) {
  if (training.empty()) throw InvalidArgument("zscore_fit_per_bin: no training features");
  const std::size_t bins = training.front().bins;
  BinNormStats stats{std::vector<double>(bins, 0.0), std::vector<double>(bins, 0.0)};
  std::vector<double> m2(bins, 0.0);
  std::size_t count = 0;
  for (const auto& f : training) {
    if (f.bins != bins) throw InvalidArgument("zscore_fit_per_bin: bin count mismatch");
    for (std::size_t i = 0; i < f.frames; ++i) {
      ++count;
      for (std::size_t b = 0; b < bins; ++b) {
        const double v = f.at(i, b);
        const double delta = v - stats.mean[b];
        stats.mean[b] += delta / static_cast<double>(count);
        m2[b] += delta * (v - stats.mean[b]);
      }
    }
  }
  if (count < 2) throw InvalidArgument("zscore_fit_per_bin: need at least two frames");
  for (std::size_t b = 0; b < bins; ++b) {
    stats.std[b] = std::sqrt(m2[b] / static_cast<double>(count));
    if (!(stats.std[b] > 0.0)) throw NumericError("zscore_fit_per_bin: zero variance in bin " + std::to_string(b));
  }
  return stats;
}

FeatureMatrix zscore_apply(const FeatureMatrix& features, const NormStats& stats) {
  if (!(stats.std > 0.0)) throw InvalidArgument("zscore_apply: std must be positive");
  FeatureMatrix out = features;
  for (double& v : out.values) v = (v - stats.mean) / stats.std;
  return out;
}

FeatureMatrix zscore_apply(const FeatureMatrix& features, const BinNormStats& stats) {
  if (stats.mean.size() != features.bins || stats.std.size() != features.bins) {
    throw InvalidArgument("zscore_apply: per-bin stats do not match bin count");
  }
  FeatureMatrix out = features;
  for (std::size_t i = 0; i < out.frames; ++i) {
    for (std::size_t b = 0; b < out.bins; ++b) out.at(i, b) = (out.at(i, b) - stats.mean[b]) / stats.std[b];
  }
  return out;
}

std::vector<FeatureWindow> window_slices(const FeatureMatrix& features, std::size_t window,
                                         std::size_t stride) {
  if (features.frames == 0) throw InvalidArgument("window_slices: empty feature matrix");
  if (window == 0 || stride == 0) throw InvalidArgument("window_slices: window and stride must be positive");
  std::vector<FeatureWindow> out;
  for (std::size_t start = 0;; start += stride) {
    FeatureWindow w;
    w.start_frame = start;
    w.valid_frames = std::min(window, features.frames - start);
    w.features = features.empty_like(window, features.bins);
    w.features.origin_s = features.frame_time(start);
    std::copy_n(features.values.begin() + static_cast<std::ptrdiff_t>(start * features.bins),
                w.valid_frames * features.bins, w.features.values.begin());
    out.push_back(std::move(w));
    if (start + window >= features.frames) break;
  }
  return out;
}

FeatureMatrix pitch_shift_cqt(const FeatureMatrix& features, int semitones) {
  if (semitones < kMinPitchShift || semitones > kMaxPitchShift) {
    throw InvalidArgument("pitch_shift_cqt: shift " + std::to_string(semitones) + " outside [-5, 6]");
  }
  require_kind(features, BinKind::kCqtLog, "pitch_shift_cqt");
  if (features.bins % kCqtBinsPerOctave != 0) throw InvalidArgument("pitch_shift_cqt: bins must be 24 per octave");
  const std::ptrdiff_t offset = 2 * semitones;
  const auto bins = static_cast<std::ptrdiff_t>(features.bins);
  FeatureMatrix out = features;
  const double floor_value = std::log(kLogEpsilon);
  for (std::size_t i = 0; i < features.frames; ++i) {
    for (std::ptrdiff_t b = 0; b < bins; ++b) {
      const std::ptrdiff_t src = b - offset;
      out.at(i, static_cast<std::size_t>(b)) =
          (src >= 0 && src < bins) ? features.at(i, static_cast<std::size_t>(src)) : floor_value;
    }
  }
  return out;
}

FrameLabels align_labels(const SegmentTrack& track, const FeatureMatrix& features) {
  FrameLabels out;
  out.classes.reserve(features.frames);
  for (std::size_t i = 0; i < features.frames; ++i) {
    const double t = features.origin_s + (static_cast<double>(i) + 0.5) * features.frame_period_s();
    out.classes.push_back(to_majmin(track.label_at(t)));
  }
  return out;
}

FrameLabels transpose_labels(const FrameLabels& labels, int semitones) {
  FrameLabels out;
  out.classes.reserve(labels.classes.size());
  for (auto c : labels.classes) out.classes.push_back(c.transposed(semitones));
  return out;
}

// Chroma files ------------------------------------------------------------------

FeatureMatrix parse_chroma_text(std::string_view text) {
  constexpr std::size_t kFields = 25;
  std::vector<double> times;
  std::vector<double> values;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;

    std::vector<double> row;
    std::size_t p = 0;
    while (p < line.size()) {
      while (p < line.size() && (line[p] == ',' || line[p] == ' ' || line[p] == '\t' || line[p] == '\r')) ++p;
      if (p >= line.size()) break;
      std::size_t q = p;
      while (q < line.size() && line[q] != ',' && line[q] != ' ' && line[q] != '\t' && line[q] != '\r') ++q;
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(line.data() + p, line.data() + q, v);
      if (ec != std::errc() || ptr != line.data() + q) {
        throw ParseError("chroma line " + std::to_string(line_no) + ": bad number '" +
                         std::string(line.substr(p, q - p)) + "'");
      }
      row.push_back(v);
      p = q;
    }
    if (row.empty()) continue;
    if (row.size() != kFields) {
      throw ParseError("chroma line " + std::to_string(line_no) + ": expected 25 fields, found " +
                       std::to_string(row.size()));
    }
    times.push_back(row[0]);
    values.insert(values.end(), row.begin() + 1, row.end());
  }
  if (times.size() < 2) throw ParseError("chroma file needs at least two rows to infer the frame period");

  const double hop = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
  if (!(hop > 0.0)) throw ParseError("chroma timestamps are not increasing");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (std::abs((times[i] - times[i - 1]) - hop) > 1e-4) {
      throw ParseError("chroma timestamps are not uniformly spaced near row " + std::to_string(i + 1));
    }
  }
  constexpr int kMicroseconds = 1'000'000;
  FeatureMatrix out(times.size(), 24, BinKind::kChroma24,
                    static_cast<int>(std::lround(hop * kMicroseconds)), kMicroseconds);
  out.origin_s = times.front();
  out.values = std::move(values);
  return out;
}

FeatureMatrix read_chroma_file(const std::filesystem::path& path) {
  try {
    return parse_chroma_text(read_text_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::vector<ChromaSequence> ht_sequences(const FeatureMatrix& chroma) {
  require_kind(chroma, BinKind::kChroma24, "ht_sequences");
  if (chroma.frames < kSegmentHop) {
    throw InvalidArgument("ht_sequences: need at least " + std::to_string(kSegmentHop) + " frames");
  }
  const std::size_t n_segments = (chroma.frames + kSegmentHop - 1) / kSegmentHop;
  const auto last = static_cast<std::ptrdiff_t>(chroma.frames) - 1;
  const std::ptrdiff_t half = kSegmentContext / 2;

  std::vector<ChromaSequence> out;
  for (std::size_t first = 0; first < n_segments; first += kSequenceSegments) {
    ChromaSequence seq;
    seq.segments = chroma.empty_like(kSequenceSegments, chroma.bins);
    seq.segments.hop_samples = chroma.hop_samples * static_cast<int>(kSegmentHop);
    seq.valid_segments = std::min(kSequenceSegments, n_segments - first);
    for (std::size_t j = 0; j < seq.valid_segments; ++j) {
      const std::size_t centre = std::min<std::size_t>((first + j) * kSegmentHop + kSegmentCenterOffset,
                                                       chroma.frames - 1);
      seq.center_frames.push_back(centre);
      auto dst = seq.segments.row(j);
      for (std::ptrdiff_t d = -half; d <= half; ++d) {
        const std::ptrdiff_t src = std::clamp(static_cast<std::ptrdiff_t>(centre) + d, std::ptrdiff_t{0}, last);
        const auto row = chroma.row(static_cast<std::size_t>(src));
        for (std::size_t b = 0; b < chroma.bins; ++b) dst[b] += row[b];
      }
      for (double& v : dst) v /= static_cast<double>(kSegmentContext);
    }
    seq.segments.origin_s = chroma.frame_time(first * kSegmentHop);
    out.push_back(std::move(seq));
  }
  return out;
}

FeatureMatrix pitch_shift_chroma(const FeatureMatrix& chroma, int semitones) {
  if (chroma.bins != 24 && chroma.bins != 12) throw InvalidArgument("pitch_shift_chroma: expected 12 or 24 bins");
  FeatureMatrix out = chroma;
  for (std::size_t i = 0; i < chroma.frames; ++i) {
    for (std::size_t half = 0; half < chroma.bins; half += 12) {
      for (int p = 0; p < 12; ++p) {
        out.at(i, half + PitchClass::wrap(p + semitones).value()) = chroma.at(i, half + p);
      }
    }
  }
  return out;
}

}  // namespace chordbench
