#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "chordbench/annotations.h"
#include "chordbench/chord.h"

namespace chordbench {

/// Single-chord comparison score in [0, 1].
struct ChordMetric {
  std::string name;
  std::function<double(const ChordLabel& reference, const ChordLabel& predicted)> score;
  bool binary = true;
};

double root_metric(const ChordLabel& ref, const ChordLabel& pred);
double majmin_metric(const ChordLabel& ref, const ChordLabel& pred);
double mirex_metric(const ChordLabel& ref, const ChordLabel& pred);

/// Chord content metric over pitch-class sets:
/// (C - I + |y|) / (2|y|) with C = |y & y_hat| and I = |y_hat \ y|.
double ccm(const ChordLabel& ref, const ChordLabel& pred);

/// Lookup by name: "root", "majmin", "mirex", "ccm". Throws InvalidArgument.
ChordMetric metric_by_name(const std::string& name);
std::vector<ChordMetric> standard_metrics();

struct AlignedSegment {
  double start_s = 0.0;
  double end_s = 0.0;
  ChordLabel ref_label = ChordLabel::no_chord();
  ChordLabel pred_label = ChordLabel::no_chord();

  double duration() const { return end_s - start_s; }
};

/// Boundary-union sweep over the reference span. The prediction must cover
/// that span (anything outside is cropped); otherwise InvalidArgument.
std::vector<AlignedSegment> align(const SegmentTrack& ref_track, const SegmentTrack& pred_track);

struct TrackScore {
  double value = 0.0;
  double total_duration_s = 0.0;
};

/// Duration-weighted mean of `metric` over the aligned segments. For a
/// binary metric this is the weighted chord symbol recall.
TrackScore weighted_score(const SegmentTrack& ref_track, const SegmentTrack& pred_track,
                          const ChordMetric& metric);

enum class FoldWeighting { kDuration, kUniform };

/// Mean of per-song scores within one fold.
double aggregate_fold(std::span<const TrackScore> scores, FoldWeighting weighting = FoldWeighting::kDuration);

}  // namespace chordbench
