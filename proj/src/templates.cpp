#include "chordbench/templates.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "chordbench/error.h"

namespace chordbench {

FeatureMatrix fold_to_chroma(const FeatureMatrix& features) {
  if (features.kind != BinKind::kCqtLog) throw InvalidArgument("fold_to_chroma: expected log-CQT features");
  if (features.bins != static_cast<std::size_t>(kCqtBins)) {
    throw InvalidArgument("fold_to_chroma: expected " + std::to_string(kCqtBins) + " bins, got " +
                          std::to_string(features.bins));
  }
  FeatureMatrix out = features.empty_like(features.frames, 12);
  out.kind = BinKind::kChroma12;
  for (std::size_t i = 0; i < features.frames; ++i) {
    const auto in = features.row(i);
    auto dst = out.row(i);
    for (std::size_t k = 0; k < features.bins; ++k) {
      const std::size_t semitone = k / 2;
      dst[semitone % 12] += std::exp(in[k]);
    }
  }
  return out;
}

ChromaTemplates default_templates(double energy_threshold) {
  ChromaTemplates t;
  t.energy_threshold = energy_threshold;
  for (int r = 0; r < 12; ++r) {
    for (int i : {0, 4, 7}) t.templates[r][(r + i) % 12] = 1.0;
    for (int i : {0, 3, 7}) t.templates[12 + r][(r + i) % 12] = 1.0;
  }
  return t;
}

double track_energy_threshold(const FeatureMatrix& chroma) {
  std::vector<double> energy(chroma.frames);
  for (std::size_t i = 0; i < chroma.frames; ++i) {
    double e = 0.0;
    for (double v : chroma.row(i)) e += v;
    energy[i] = e;
  }
  double median = 0.0;
  if (!energy.empty()) {
    auto mid = energy.begin() + static_cast<std::ptrdiff_t>(energy.size() / 2);
    std::nth_element(energy.begin(), mid, energy.end());
    median = *mid;
  }
  return std::max(0.01 * median, 2.0 * kFoldedSilenceEnergy);
}

FrameLabels template_predict(const FeatureMatrix& chroma, const ChromaTemplates& templates) {
  if (chroma.bins != 12) throw InvalidArgument("template_predict: expected 12-bin chroma");
  // Each template's active pitch classes in ascending interval order from its
  // root, so a rotated input reproduces the same sums exactly.
  struct Active {
    std::vector<int> offsets;
    int root = 0;
    double norm = 0.0;
  };
  std::array<Active, 24> active;
  for (int c = 0; c < 24; ++c) {
    Active& a = active[c];
    a.root = c % 12;
    for (int i = 0; i < 12; ++i) {
      const double w = templates.templates[c][(a.root + i) % 12];
      if (w != 0.0) a.offsets.push_back(i);
      a.norm += w * w;
    }
    a.norm = std::sqrt(a.norm);
  }

  FrameLabels out;
  out.classes.reserve(chroma.frames);
  for (std::size_t f = 0; f < chroma.frames; ++f) {
    const auto x = chroma.row(f);
    double energy = 0.0;
    double sq = 0.0;
    for (double v : x) {
      energy += v;
      sq += v * v;
    }
    if (energy < templates.energy_threshold || !(sq > 0.0)) {
      out.classes.push_back(MajMinClass::no_chord());
      continue;
    }
    // The input norm is shared by every class, so it is left out of the argmax.
    int best = 0;
    double best_score = -1e300;
    for (int c = 0; c < 24; ++c) {
      const Active& a = active[c];
      if (!(a.norm > 0.0)) continue;
      double dot = 0.0;
      for (int i : a.offsets) dot += templates.templates[c][(a.root + i) % 12] * x[(a.root + i) % 12];
      const double score = dot / a.norm;
      if (score > best_score) {
        best_score = score;
        best = c;
      }
    }
    out.classes.emplace_back(best);
  }
  return out;
}

SegmentTrack classes_to_track(const FrameLabels& labels, double origin_s, double frame_period_s,
                              std::string source_id) {
  SegmentTrack track;
  track.source_id = std::move(source_id);
  const auto& c = labels.classes;
  std::size_t i = 0;
  while (i < c.size()) {
    std::size_t j = i + 1;
    while (j < c.size() && c[j] == c[i]) ++j;
    track.segments.push_back({origin_s + static_cast<double>(i) * frame_period_s,
                              origin_s + static_cast<double>(j) * frame_period_s, label_of(c[i])});
    i = j;
  }
  return track;
}

}  // namespace chordbench
