#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>

#include "chordbench/annotations.h"
#include "chordbench/chord.h"

namespace chordbench {

/// Chord occurrence counts per vocabulary class. A run of consecutive
/// segments with the same class counts once.
struct OccurrenceHistogram {
  std::array<std::uint64_t, MajMinClass::kCount> counts{};

  std::uint64_t total() const;
  OccurrenceHistogram& operator+=(const OccurrenceHistogram& other);
  friend bool operator==(const OccurrenceHistogram&, const OccurrenceHistogram&) = default;
};

/// Chord change counts, from-class by to-class. The diagonal stays zero.
struct TransitionMatrix {
  std::array<std::array<std::uint64_t, MajMinClass::kCount>, MajMinClass::kCount> counts{};

  std::uint64_t total() const;
  TransitionMatrix& operator+=(const TransitionMatrix& other);
  friend bool operator==(const TransitionMatrix&, const TransitionMatrix&) = default;
};

struct StatsOptions {
  /// Leave N out of both statistics.
  bool drop_no_chord = false;
  /// Remove N before counting changes, so C N G counts as C -> G.
  bool skip_no_chord_transitions = false;
};

OccurrenceHistogram chord_occurrences(std::span<const SegmentTrack> tracks, const StatsOptions& options = {});
TransitionMatrix chord_transitions(std::span<const SegmentTrack> tracks, const StatsOptions& options = {});

/// CSV with header "class,count" and one row per class.
std::string format_histogram_csv(const OccurrenceHistogram& histogram);
/// 25x25 CSV grid; the header and first column carry class names.
std::string format_transitions_csv(const TransitionMatrix& matrix);

OccurrenceHistogram parse_histogram_csv(std::string_view text);
TransitionMatrix parse_transitions_csv(std::string_view text);

void export_stats(const OccurrenceHistogram& histogram, const std::filesystem::path& path);
void export_stats(const TransitionMatrix& matrix, const std::filesystem::path& path);

}  // namespace chordbench
