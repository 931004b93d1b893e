#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chordbench/chord.h"

namespace chordbench {

struct TimedSegment {
  double start_s = 0.0;
  double end_s = 0.0;
  ChordLabel label = ChordLabel::no_chord();

  double duration() const { return end_s - start_s; }
  friend bool operator==(const TimedSegment&, const TimedSegment&) = default;
};

struct TimeSpan {
  double start_s = 0.0;
  double end_s = 0.0;
};

/// Time-ordered, non-overlapping chord segments of one recording.
struct SegmentTrack {
  std::vector<TimedSegment> segments;
  std::string source_id;

  bool empty() const { return segments.empty(); }
  double start() const { return segments.empty() ? 0.0 : segments.front().start_s; }
  double end() const { return segments.empty() ? 0.0 : segments.back().end_s; }
  TimeSpan extent() const { return {start(), end()}; }
  /// Label at time t using half-open [start, end) segments; N outside.
  ChordLabel label_at(double t) const;

  friend bool operator==(const SegmentTrack& a, const SegmentTrack& b) {
    return a.segments == b.segments;
  }
};

/// Throws InvalidArgument unless segments are sorted, non-overlapping and
/// have positive duration.
void validate(const SegmentTrack& track);

// .lab ----------------------------------------------------------------------

SegmentTrack parse_lab(std::string_view text, std::string source_id = {});
SegmentTrack read_lab(const std::filesystem::path& path);
std::string format_lab(const SegmentTrack& track);
void write_lab(const SegmentTrack& track, const std::filesystem::path& path);

// Winterreise-style CSV -------------------------------------------------------

enum class CsvNotation { kShorthand, kMajMin };

/// Header names for the columns of a chord CSV. The defaults match the
/// Winterreise release; other corpora can remap them.
struct CsvColumns {
  std::string start = "start";
  std::string end = "end";
  std::string shorthand = "shorthand";
  std::string majmin = "majmin";
};

SegmentTrack parse_chord_csv(std::string_view text, CsvNotation notation,
                             const CsvColumns& columns = {}, std::string source_id = {});
SegmentTrack read_winterreise_csv(const std::filesystem::path& path, CsvNotation notation,
                                  const CsvColumns& columns = {});

/// Picks the most frequent of comma, semicolon and tab on a header line.
char detect_delimiter(std::string_view header_line);

// AAM-style ARFF -------------------------------------------------------------

/// Chord value in AAM files that stands for "no chord".
inline constexpr std::string_view kBassNoteException = "BASS NOTE EXCEPTION";

SegmentTrack parse_aam_arff(std::string_view text, std::string source_id = {});
SegmentTrack read_aam_arff(const std::filesystem::path& path);

// Normalization ----------------------------------------------------------------

/// Fills gaps with N and merges equal neighbours. With a span the result
/// covers it exactly (N padding at both ends); a span narrower than the
/// track extent is rejected.
SegmentTrack normalize(const SegmentTrack& track, std::optional<TimeSpan> span = std::nullopt);

/// Pads with N and crops so that the result covers `span` exactly. Used to
/// bring predictions onto the reference span before scoring.
SegmentTrack conform_to_span(const SegmentTrack& track, TimeSpan span);

/// Reads a whole text file; throws IoError.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace chordbench
