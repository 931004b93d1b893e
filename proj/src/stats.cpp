#include "chordbench/stats.h"

#include <charconv>
#include <string>
#include <vector>

#include "chordbench/error.h"

namespace chordbench {

namespace {

// Class sequence of a track with runs collapsed, honouring the options.
std::vector<int> class_runs(const SegmentTrack& track, bool remove_no_chord) {
  std::vector<int> runs;
  for (const auto& s : track.segments) {
    const int c = to_majmin(s.label).index();
    if (remove_no_chord && c == MajMinClass::kNoChord) continue;
    if (runs.empty() || runs.back() != c) runs.push_back(c);
  }
  return runs;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    std::size_t comma = line.find(',', pos);
    std::string field(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    out.push_back(std::move(field));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::vector<std::string_view> non_empty_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) lines.push_back(line);
    pos = nl + 1;
  }
  return lines;
}

int class_from_name(const std::string& name) {
  for (const auto cls : all_majmin_classes()) {
    if (cls.name() == name) return cls.index();
  }
  throw ParseError("unknown class name '" + name + "'");
}

std::uint64_t parse_count(const std::string& s) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ParseError("bad count '" + s + "'");
  return v;
}

}  // namespace

std::uint64_t OccurrenceHistogram::total() const {
  std::uint64_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

OccurrenceHistogram& OccurrenceHistogram::operator+=(const OccurrenceHistogram& other) {
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
  return *this;
}

std::uint64_t TransitionMatrix::total() const {
  std::uint64_t t = 0;
  for (const auto& row : counts)
    for (auto c : row) t += c;
  return t;
}

TransitionMatrix& TransitionMatrix::operator+=(const TransitionMatrix& other) {
  for (std::size_t i = 0; i < counts.size(); ++i)
    for (std::size_t j = 0; j < counts.size(); ++j) counts[i][j] += other.counts[i][j];
  return *this;
}

OccurrenceHistogram chord_occurrences(std::span<const SegmentTrack> tracks, const StatsOptions& options) {
  OccurrenceHistogram h;
  for (const auto& track : tracks) {
    for (int c : class_runs(track, options.drop_no_chord)) ++h.counts[c];
  }
  return h;
}

TransitionMatrix chord_transitions(std::span<const SegmentTrack> tracks, const StatsOptions& options) {
  TransitionMatrix m;
  const bool remove_n = options.drop_no_chord || options.skip_no_chord_transitions;
  for (const auto& track : tracks) {
    const auto runs = class_runs(track, remove_n);
    for (std::size_t i = 1; i < runs.size(); ++i) ++m.counts[runs[i - 1]][runs[i]];
  }
  return m;
}

std::string format_histogram_csv(const OccurrenceHistogram& histogram) {
  std::string out = "class,count\n";
  for (const auto cls : all_majmin_classes()) {
    out += cls.name() + "," + std::to_string(histogram.counts[cls.index()]) + "\n";
  }
  return out;
}

std::string format_transitions_csv(const TransitionMatrix& matrix) {
  std::string out = "from\\to";
  for (const auto cls : all_majmin_classes()) out += "," + cls.name();
  out += '\n';
  for (const auto from : all_majmin_classes()) {
    out += from.name();
    for (const auto to : all_majmin_classes()) {
      out += "," + std::to_string(matrix.counts[from.index()][to.index()]);
    }
    out += '\n';
  }
  return out;
}

OccurrenceHistogram parse_histogram_csv(std::string_view text) {
  const auto lines = non_empty_lines(text);
  if (lines.empty()) throw ParseError("histogram CSV is empty");
  OccurrenceHistogram h;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split_csv_line(lines[i]);
    if (f.size() != 2) throw ParseError("histogram CSV line " + std::to_string(i + 1) + ": expected 2 fields");
    h.counts[class_from_name(f[0])] = parse_count(f[1]);
  }
  return h;
}

TransitionMatrix parse_transitions_csv(std::string_view text) {
  const auto lines = non_empty_lines(text);
  if (lines.empty()) throw ParseError("transition CSV is empty");
  const auto header = split_csv_line(lines[0]);
  if (header.size() != MajMinClass::kCount + 1) {
    throw ParseError("transition CSV header must name 25 classes");
  }
  std::vector<int> cols;
  for (std::size_t j = 1; j < header.size(); ++j) cols.push_back(class_from_name(header[j]));
  TransitionMatrix m;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split_csv_line(lines[i]);
    if (f.size() != header.size()) {
      throw ParseError("transition CSV line " + std::to_string(i + 1) + ": expected 26 fields");
    }
    const int row = class_from_name(f[0]);
    for (std::size_t j = 1; j < f.size(); ++j) m.counts[row][cols[j - 1]] = parse_count(f[j]);
  }
  return m;
}

void export_stats(const OccurrenceHistogram& histogram, const std::filesystem::path& path) {
  write_text_file(path, format_histogram_csv(histogram));
}

void export_stats(const TransitionMatrix& matrix, const std::filesystem::path& path) {
  write_text_file(path, format_transitions_csv(matrix));
}

}  // namespace chordbench
