#pragma once

// Brute-force reference implementations used to check the library. They are
// written from the definitions directly and share no code with src/.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace oracle {

/// A vocabulary chord: root 0-11 and family, or N.
struct Triad {
  bool no_chord = true;
  int root = 0;
  bool minor = false;
};

inline Triad triad_of_index(int index) {
  if (index == 24) return {};
  return {false, index % 12, index >= 12};
}

inline std::string triad_label(const Triad& t) {
  static const char* kNames[] = {"C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B"};
  if (t.no_chord) return "N";
  return std::string(kNames[t.root]) + (t.minor ? ":min" : ":maj");
}

inline std::set<int> triad_notes(const Triad& t) {
  if (t.no_chord) return {};
  return {t.root, (t.root + (t.minor ? 3 : 4)) % 12, (t.root + 7) % 12};
}

/// (C - I + |y|) / (2|y|) with set arithmetic on explicit sets.
inline double ccm(const std::set<int>& y, const std::set<int>& yhat) {
  if (y.empty()) return yhat.empty() ? 1.0 : 0.0;
  std::vector<int> common, extra;
  std::set_intersection(y.begin(), y.end(), yhat.begin(), yhat.end(), std::back_inserter(common));
  std::set_difference(yhat.begin(), yhat.end(), y.begin(), y.end(), std::back_inserter(extra));
  const double c = static_cast<double>(common.size());
  const double i = static_cast<double>(extra.size());
  const double n = static_cast<double>(y.size());
  return std::clamp((c - i + n) / (2 * n), 0.0, 1.0);
}

/// Timed labels with boundaries on an integer millisecond grid.
struct MsSegment {
  std::int64_t start_ms;
  std::int64_t end_ms;
  std::string label;
};

/// Label covering millisecond cell [t, t+1), or "N" when uncovered.
inline const std::string& label_in_cell(const std::vector<MsSegment>& segs, std::int64_t t) {
  static const std::string kN = "N";
  for (const auto& s : segs) {
    if (s.start_ms <= t && t < s.end_ms) return s.label;
  }
  return kN;
}

/// Duration-weighted mean of `score` sampled once per millisecond of the
/// reference extent.
inline double grid_weighted_score(const std::vector<MsSegment>& ref, const std::vector<MsSegment>& pred,
                                  const std::function<double(const std::string&, const std::string&)>& score) {
  const std::int64_t begin = ref.front().start_ms;
  const std::int64_t end = ref.back().end_ms;
  // Cells are grouped by label pair so the sum is exact in the count.
  std::map<std::pair<std::string, std::string>, std::int64_t> cells;
  for (std::int64_t t = begin; t < end; ++t) ++cells[{label_in_cell(ref, t), label_in_cell(pred, t)}];
  double total = 0.0;
  for (const auto& [pair, count] : cells) total += score(pair.first, pair.second) * static_cast<double>(count);
  return total / static_cast<double>(end - begin);
}

/// Run-length encoding of a class sequence.
inline std::vector<int> run_length_values(const std::vector<int>& seq) {
  std::vector<int> runs;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i == 0 || seq[i] != seq[i - 1]) runs.push_back(seq[i]);
  }
  return runs;
}

inline std::vector<std::uint64_t> occurrence_counts(const std::vector<std::vector<int>>& tracks) {
  std::vector<std::uint64_t> counts(25, 0);
  for (const auto& t : tracks) {
    for (int c : run_length_values(t)) ++counts[c];
  }
  return counts;
}

/// Pairwise scan of adjacent entries; equal neighbours are not changes.
inline std::vector<std::vector<std::uint64_t>> transition_counts(const std::vector<std::vector<int>>& tracks) {
  std::vector<std::vector<std::uint64_t>> counts(25, std::vector<std::uint64_t>(25, 0));
  for (const auto& t : tracks) {
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
      if (t[i] != t[i + 1]) ++counts[t[i]][t[i + 1]];
    }
  }
  return counts;
}

/// Two-pass mean and population standard deviation.
inline std::pair<double, double> mean_std(const std::vector<double>& xs) {
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size()))};
}

/// Central difference (f(x+h) - f(x-h)) / 2h for every coordinate.
inline std::vector<double> finite_difference(std::vector<double> x, double h,
                                             const std::function<double(const std::vector<double>&)>& f) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = f(x);
    x[i] = saved - h;
    const double down = f(x);
    x[i] = saved;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

/// Random track of vocabulary labels on a millisecond grid.
inline std::vector<MsSegment> random_ms_track(std::mt19937_64& rng, std::int64_t start_ms, std::int64_t end_ms,
                                              int max_segments) {
  std::uniform_int_distribution<int> count_dist(1, max_segments);
  std::uniform_int_distribution<int> label_dist(0, 24);
  const int n = count_dist(rng);
  std::set<std::int64_t> cuts;
  std::uniform_int_distribution<std::int64_t> cut_dist(start_ms + 1, end_ms - 1);
  for (int i = 1; i < n && end_ms - start_ms > 1; ++i) cuts.insert(cut_dist(rng));
  std::vector<std::int64_t> edges = {start_ms};
  edges.insert(edges.end(), cuts.begin(), cuts.end());
  edges.push_back(end_ms);
  std::vector<MsSegment> out;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    out.push_back({edges[i], edges[i + 1], triad_label(triad_of_index(label_dist(rng)))});
  }
  return out;
}

}  // namespace oracle
