#pragma once

#include <array>
#include <string>

#include "chordbench/annotations.h"
#include "chordbench/features.h"

namespace chordbench {

/// Folds log-CQT frames to 12 pitch classes: bins 2p and 2p+1 of every
/// octave go to class p, summed as magnitudes (exp of the log value).
FeatureMatrix fold_to_chroma(const FeatureMatrix& features);

/// Energy of a silent frame after folding (every bin at the log floor).
inline constexpr double kFoldedSilenceEnergy = kCqtBins * kLogEpsilon;

/// Binary triad templates for the 24 chord classes; N uses the energy gate.
struct ChromaTemplates {
  std::array<std::array<double, 12>, MajMinClass::kCount> templates{};
  double energy_threshold = 0.0;
};

ChromaTemplates default_templates(double energy_threshold = 0.0);

/// 1% of the median frame energy, never below twice the folded silence floor.
double track_energy_threshold(const FeatureMatrix& chroma);

/// Per frame: N below the energy threshold, else the chord class with the
/// highest cosine similarity (lowest index on ties).
FrameLabels template_predict(const FeatureMatrix& chroma, const ChromaTemplates& templates);

/// Merges runs of equal frame classes into a normalized track. Frame i spans
/// [origin + i * period, origin + (i + 1) * period).
SegmentTrack classes_to_track(const FrameLabels& labels, double origin_s, double frame_period_s,
                              std::string source_id = {});

}  // namespace chordbench
