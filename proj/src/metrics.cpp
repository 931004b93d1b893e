#include "chordbench/metrics.h"

#include <algorithm>

#include "chordbench/error.h"

namespace chordbench {

namespace {
constexpr double kSpanTolerance = 1e-9;
}

double root_metric(const ChordLabel& ref, const ChordLabel& pred) {
  return root_of(ref) == root_of(pred) ? 1.0 : 0.0;
}

double majmin_metric(const ChordLabel& ref, const ChordLabel& pred) {
  return to_majmin(ref) == to_majmin(pred) ? 1.0 : 0.0;
}

double mirex_metric(const ChordLabel& ref, const ChordLabel& pred) {
  const PitchClassSet y = pitch_class_set(ref);
  const PitchClassSet y_hat = pitch_class_set(pred);
  if (y.empty() || y_hat.empty()) return y.empty() && y_hat.empty() ? 1.0 : 0.0;
  // Dyads and single notes need every reference pitch class.
  const int needed = std::min(3, y.size());
  return (y & y_hat).size() >= needed ? 1.0 : 0.0;
}

double ccm(const ChordLabel& ref, const ChordLabel& pred) {
  const PitchClassSet y = pitch_class_set(ref);
  const PitchClassSet y_hat = pitch_class_set(pred);
  if (y.empty()) return y_hat.empty() ? 1.0 : 0.0;
  const int correct = (y & y_hat).size();
  const int extra = (y_hat - y).size();
  const double a = static_cast<double>(correct - extra + y.size()) / (2.0 * y.size());
  return std::clamp(a, 0.0, 1.0);
}

ChordMetric metric_by_name(const std::string& name) {
  if (name == "root") return {"root", root_metric, true};
  if (name == "majmin") return {"majmin", majmin_metric, true};
  if (name == "mirex") return {"mirex", mirex_metric, true};
  if (name == "ccm") return {"ccm", ccm, false};
  throw InvalidArgument("unknown metric '" + name + "'");
}

std::vector<ChordMetric> standard_metrics() {
  return {metric_by_name("root"), metric_by_name("majmin"), metric_by_name("mirex"), metric_by_name("ccm")};
}

std::vector<AlignedSegment> align(const SegmentTrack& ref_track, const SegmentTrack& pred_track) {
  std::vector<AlignedSegment> out;
  if (ref_track.empty()) return out;
  const TimeSpan span = ref_track.extent();
  if (pred_track.empty() || pred_track.start() > span.start_s + kSpanTolerance ||
      pred_track.end() < span.end_s - kSpanTolerance) {
    throw InvalidArgument("align: prediction does not cover the reference span of '" +
                          ref_track.source_id + "'");
  }

  const auto& ref = ref_track.segments;
  const auto& pred = pred_track.segments;
  std::size_t j = 0;
  while (j < pred.size() && pred[j].end_s <= span.start_s) ++j;

  for (const auto& r : ref) {
    double t = r.start_s;
    while (t < r.end_s) {
      while (j < pred.size() && pred[j].end_s <= t) ++j;
      // A gap inside the prediction counts as N up to the next predicted segment.
      ChordLabel p = ChordLabel::no_chord();
      double next = r.end_s;
      if (j < pred.size()) {
        if (pred[j].start_s <= t) {
          p = pred[j].label;
          next = std::min(next, pred[j].end_s);
        } else {
          next = std::min(next, pred[j].start_s);
        }
      }
      if (next > t) {
        if (!out.empty() && out.back().end_s == t && out.back().ref_label == r.label &&
            out.back().pred_label == p) {
          out.back().end_s = next;
        } else {
          out.push_back({t, next, r.label, p});
        }
      }
      t = next;
    }
  }
  return out;
}

TrackScore weighted_score(const SegmentTrack& ref_track, const SegmentTrack& pred_track,
                          const ChordMetric& metric) {
  const auto aligned = align(ref_track, pred_track);
  double total = 0.0;
  double weighted = 0.0;
  for (const auto& a : aligned) {
    total += a.duration();
    weighted += a.duration() * metric.score(a.ref_label, a.pred_label);
  }
  if (!(total > 0.0)) {
    throw InvalidArgument("weighted_score: zero-length span for '" + ref_track.source_id + "'");
  }
  return {std::clamp(weighted / total, 0.0, 1.0), total};
}

double aggregate_fold(std::span<const TrackScore> scores, FoldWeighting weighting) {
  if (scores.empty()) throw InvalidArgument("aggregate_fold: no scores");
  double num = 0.0;
  double den = 0.0;
  for (const auto& s : scores) {
    const double w = weighting == FoldWeighting::kDuration ? s.total_duration_s : 1.0;
    num += w * s.value;
    den += w;
  }
  if (!(den > 0.0)) throw InvalidArgument("aggregate_fold: zero total weight");
  return num / den;
}

}  // namespace chordbench
