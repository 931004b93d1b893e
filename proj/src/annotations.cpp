#include "chordbench/annotations.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "chordbench/error.h"

namespace chordbench {

namespace {

// Boundaries closer than this are treated as touching.
constexpr double kTimeTolerance = 1e-9;

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = nl + 1;
  }
  return lines;
}

std::string at_line(std::size_t line_no) { return "line " + std::to_string(line_no); }

// Appends a row read from a file, enforcing ordering against the previous one.
void append_row(SegmentTrack& track, TimedSegment seg, std::size_t line_no, std::size_t& prev_line) {
  if (!(seg.end_s > seg.start_s)) {
    throw ParseError(at_line(line_no) + ": end time must exceed start time");
  }
  if (seg.start_s < 0.0) throw ParseError(at_line(line_no) + ": negative start time");
  if (!track.segments.empty()) {
    TimedSegment& prev = track.segments.back();
    if (seg.start_s < prev.start_s) {
      throw ParseError(at_line(line_no) + ": non-monotonic start time (previous row at " +
                       at_line(prev_line) + ")");
    }
    if (seg.start_s < prev.end_s - kTimeTolerance) {
      throw ParseError("rows at " + at_line(prev_line) + " and " + at_line(line_no) + " overlap");
    }
    if (seg.start_s < prev.end_s) seg.start_s = prev.end_s;
  }
  track.segments.push_back(std::move(seg));
  prev_line = line_no;
}

std::string format_time(double t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", t);
  return buf;
}

// Splits one delimited line, honouring single and double quotes.
std::vector<std::string> split_quoted(std::string_view line, char delim, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  char quote = 0;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quote) {
      if (c == '\\' && i + 1 < line.size()) {
        cur += line[++i];
      } else if (c == quote) {
        quote = 0;
      } else {
        cur += c;
      }
    } else if (c == '\'' || c == '"') {
      if (!std::string_view(trim(cur)).empty()) {
        throw ParseError(at_line(line_no) + ", column " + std::to_string(i + 1) +
                         ": quote inside unquoted value");
      }
      cur.clear();
      quote = c;
      was_quoted = true;
    } else if (c == delim) {
      fields.push_back(was_quoted ? cur : std::string(trim(cur)));
      cur.clear();
      was_quoted = false;
    } else if (!was_quoted) {
      cur += c;
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      throw ParseError(at_line(line_no) + ", column " + std::to_string(i + 1) +
                       ": text after closing quote");
    }
  }
  if (quote) throw ParseError(at_line(line_no) + ": unterminated quote");
  fields.push_back(was_quoted ? cur : std::string(trim(cur)));
  return fields;
}

ChordLabel parse_label_at(std::string_view text, std::size_t line_no) {
  try {
    return parse_harte(text);
  } catch (const ParseError& e) {
    throw ParseError(at_line(line_no) + ": " + e.what());
  }
}

}  // namespace

ChordLabel SegmentTrack::label_at(double t) const {
  auto it = std::upper_bound(segments.begin(), segments.end(), t,
                             [](double v, const TimedSegment& s) { return v < s.start_s; });
  if (it == segments.begin()) return ChordLabel::no_chord();
  --it;
  if (t >= it->start_s && t < it->end_s) return it->label;
  return ChordLabel::no_chord();
}

void validate(const SegmentTrack& track) {
  for (std::size_t i = 0; i < track.segments.size(); ++i) {
    const auto& s = track.segments[i];
    if (!(s.end_s > s.start_s)) {
      throw InvalidArgument("segment " + std::to_string(i) + " has non-positive duration");
    }
    if (i > 0 && s.start_s < track.segments[i - 1].end_s) {
      throw InvalidArgument("segments " + std::to_string(i - 1) + " and " + std::to_string(i) +
                            " overlap or are out of order");
    }
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed on '" + path.string() + "'");
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw IoError("write failed on '" + path.string() + "'");
}

// .lab ----------------------------------------------------------------------

SegmentTrack parse_lab(std::string_view text, std::string source_id) {
  SegmentTrack track;
  track.source_id = std::move(source_id);
  const auto lines = split_lines(text);
  std::size_t prev_line = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    std::string_view line = trim(lines[i]);
    if (line.empty()) continue;

    std::string_view fields[2];
    for (auto& f : fields) {
      const std::size_t ws = line.find_first_of(" \t");
      if (ws == std::string_view::npos) {
        throw ParseError(at_line(line_no) + ": expected 'start end label'");
      }
      f = line.substr(0, ws);
      line = trim(line.substr(ws));
    }
    TimedSegment seg;
    if (!parse_double(fields[0], seg.start_s)) {
      throw ParseError(at_line(line_no) + ": bad start time '" + std::string(fields[0]) + "'");
    }
    if (!parse_double(fields[1], seg.end_s)) {
      throw ParseError(at_line(line_no) + ": bad end time '" + std::string(fields[1]) + "'");
    }
    if (line.empty()) throw ParseError(at_line(line_no) + ": missing label");
    seg.label = parse_label_at(line, line_no);
    append_row(track, std::move(seg), line_no, prev_line);
  }
  return track;
}

SegmentTrack read_lab(const std::filesystem::path& path) {
  try {
    return parse_lab(read_text_file(path), path.stem().string());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string format_lab(const SegmentTrack& track) {
  std::string out;
  for (const auto& s : track.segments) {
    out += format_time(s.start_s);
    out += '\t';
    out += format_time(s.end_s);
    out += '\t';
    out += render_harte(s.label);
    out += '\n';
  }
  return out;
}

void write_lab(const SegmentTrack& track, const std::filesystem::path& path) {
  write_text_file(path, format_lab(track));
}

// CSV -----------------------------------------------------------------------

char detect_delimiter(std::string_view header_line) {
  const char candidates[] = {',', ';', '\t'};
  char best = ',';
  std::ptrdiff_t best_count = 0;
  for (char c : candidates) {
    const auto n = std::count(header_line.begin(), header_line.end(), c);
    if (n > best_count) {
      best = c;
      best_count = n;
    }
  }
  return best;
}

SegmentTrack parse_chord_csv(std::string_view text, CsvNotation notation, const CsvColumns& columns,
                             std::string source_id) {
  const auto lines = split_lines(text);
  std::size_t header_idx = 0;
  while (header_idx < lines.size() && trim(lines[header_idx]).empty()) ++header_idx;
  if (header_idx == lines.size()) throw ParseError("CSV has no header line");

  const char delim = detect_delimiter(lines[header_idx]);
  const auto header = split_quoted(lines[header_idx], delim, header_idx + 1);
  auto column_index = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (lower(header[i]) == lower(name)) return i;
    }
    throw ParseError("CSV is missing column '" + name + "'");
  };
  const std::size_t c_start = column_index(columns.start);
  const std::size_t c_end = column_index(columns.end);
  const std::size_t c_label =
      column_index(notation == CsvNotation::kShorthand ? columns.shorthand : columns.majmin);
  const std::size_t needed = std::max({c_start, c_end, c_label}) + 1;

  SegmentTrack track;
  track.source_id = std::move(source_id);
  std::size_t prev_line = 0;
  for (std::size_t i = header_idx + 1; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    if (trim(lines[i]).empty()) continue;
    const auto fields = split_quoted(lines[i], delim, line_no);
    if (fields.size() < needed) {
      throw ParseError(at_line(line_no) + ": expected at least " + std::to_string(needed) + " fields");
    }
    TimedSegment seg;
    if (!parse_double(fields[c_start], seg.start_s)) {
      throw ParseError(at_line(line_no) + ": bad start time '" + fields[c_start] + "'");
    }
    if (!parse_double(fields[c_end], seg.end_s)) {
      throw ParseError(at_line(line_no) + ": bad end time '" + fields[c_end] + "'");
    }
    seg.label = parse_label_at(trim(fields[c_label]), line_no);
    append_row(track, std::move(seg), line_no, prev_line);
  }
  return track;
}

SegmentTrack read_winterreise_csv(const std::filesystem::path& path, CsvNotation notation,
                                  const CsvColumns& columns) {
  try {
    return parse_chord_csv(read_text_file(path), notation, columns, path.stem().string());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

// ARFF ------------------------------------------------------------------------

namespace {

struct ArffAttribute {
  std::string name;
  std::string type;  // "numeric", "string" or "nominal"
  std::vector<std::string> nominal_values;
};

[[noreturn]] void arff_fail(std::size_t line_no, std::size_t col, const std::string& why) {
  throw ParseError("ARFF syntax error at line " + std::to_string(line_no) + ", column " +
                   std::to_string(col) + ": " + why);
}

// Reads a possibly quoted name token starting at `pos`; advances `pos`.
std::string read_token(std::string_view line, std::size_t& pos, std::size_t line_no) {
  while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
  if (pos >= line.size()) arff_fail(line_no, pos + 1, "unexpected end of line");
  const char c = line[pos];
  if (c == '\'' || c == '"') {
    const std::size_t close = line.find(c, pos + 1);
    if (close == std::string_view::npos) arff_fail(line_no, pos + 1, "unterminated quote");
    std::string tok(line.substr(pos + 1, close - pos - 1));
    pos = close + 1;
    return tok;
  }
  const std::size_t start = pos;
  while (pos < line.size() && !std::isspace(static_cast<unsigned char>(line[pos])) && line[pos] != '{') ++pos;
  return std::string(line.substr(start, pos - start));
}

std::size_t find_attribute(const std::vector<ArffAttribute>& attrs, std::initializer_list<const char*> keys) {
  for (const char* key : keys) {
    for (std::size_t i = 0; i < attrs.size(); ++i) {
      if (lower(attrs[i].name).find(key) != std::string::npos) return i;
    }
  }
  return attrs.size();
}

}  // namespace

SegmentTrack parse_aam_arff(std::string_view text, std::string source_id) {
  const auto lines = split_lines(text);
  std::vector<ArffAttribute> attrs;
  bool in_data = false;
  bool saw_relation = false;
  std::size_t i_onset = 0, i_offset = 0, i_chord = 0;

  SegmentTrack track;
  track.source_id = std::move(source_id);
  std::size_t prev_line = 0;

  for (std::size_t li = 0; li < lines.size(); ++li) {
    const std::size_t line_no = li + 1;
    std::string_view line = trim(lines[li]);
    if (line.empty() || line.front() == '%') continue;

    if (!in_data) {
      if (line.front() != '@') arff_fail(line_no, 1, "expected a header declaration");
      std::size_t pos = 1;
      while (pos < line.size() && std::isalpha(static_cast<unsigned char>(line[pos]))) ++pos;
      const std::string keyword = lower(line.substr(1, pos - 1));
      if (keyword == "relation") {
        read_token(line, pos, line_no);
        saw_relation = true;
      } else if (keyword == "attribute") {
        ArffAttribute attr;
        attr.name = read_token(line, pos, line_no);
        while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
        if (pos >= line.size()) arff_fail(line_no, pos + 1, "attribute '" + attr.name + "' has no type");
        if (line[pos] == '{') {
          const std::size_t close = line.find('}', pos);
          if (close == std::string_view::npos) arff_fail(line_no, pos + 1, "unterminated nominal list");
          attr.type = "nominal";
          attr.nominal_values = split_quoted(line.substr(pos + 1, close - pos - 1), ',', line_no);
        } else {
          const std::string type = lower(read_token(line, pos, line_no));
          if (type == "numeric" || type == "real" || type == "integer") {
            attr.type = "numeric";
          } else if (type == "string") {
            attr.type = "string";
          } else {
            arff_fail(line_no, pos, "unsupported attribute type '" + type + "'");
          }
        }
        attrs.push_back(std::move(attr));
      } else if (keyword == "data") {
        if (!saw_relation) arff_fail(line_no, 1, "@data before @relation");
        i_onset = find_attribute(attrs, {"onset", "start"});
        i_offset = find_attribute(attrs, {"offset", "end"});
        i_chord = find_attribute(attrs, {"chord", "label"});
        if (i_onset == attrs.size()) throw ParseError("ARFF header has no onset attribute");
        if (i_offset == attrs.size()) throw ParseError("ARFF header has no offset attribute");
        if (i_chord == attrs.size()) throw ParseError("ARFF header has no chord attribute");
        if (attrs[i_onset].type != "numeric" || attrs[i_offset].type != "numeric") {
          throw ParseError("ARFF onset/offset attributes must be numeric");
        }
        in_data = true;
      } else {
        arff_fail(line_no, 1, "unknown declaration '@" + keyword + "'");
      }
      continue;
    }

    const auto fields = split_quoted(line, ',', line_no);
    if (fields.size() != attrs.size()) {
      arff_fail(line_no, 1, "expected " + std::to_string(attrs.size()) + " values, found " +
                                std::to_string(fields.size()));
    }
    TimedSegment seg;
    if (!parse_double(fields[i_onset], seg.start_s)) {
      arff_fail(line_no, 1, "bad onset value '" + fields[i_onset] + "'");
    }
    if (!parse_double(fields[i_offset], seg.end_s)) {
      arff_fail(line_no, 1, "bad offset value '" + fields[i_offset] + "'");
    }
    const std::string& chord = fields[i_chord];
    const auto& cattr = attrs[i_chord];
    if (cattr.type == "nominal" &&
        std::find(cattr.nominal_values.begin(), cattr.nominal_values.end(), chord) ==
            cattr.nominal_values.end()) {
      arff_fail(line_no, 1, "value '" + chord + "' not declared for nominal attribute '" + cattr.name + "'");
    }
    seg.label = chord == kBassNoteException ? ChordLabel::no_chord() : parse_label_at(trim(chord), line_no);
    append_row(track, std::move(seg), line_no, prev_line);
  }
  if (!in_data) throw ParseError("ARFF file has no @data section");
  return track;
}

SegmentTrack read_aam_arff(const std::filesystem::path& path) {
  try {
    return parse_aam_arff(read_text_file(path), path.stem().string());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

// Normalization -----------------------------------------------------------------

SegmentTrack normalize(const SegmentTrack& track, std::optional<TimeSpan> span) {
  validate(track);
  if (span) {
    if (!(span->end_s > span->start_s)) throw InvalidArgument("normalize: empty span");
    if (!track.empty() && (span->start_s > track.start() + kTimeTolerance ||
                           span->end_s < track.end() - kTimeTolerance)) {
      throw InvalidArgument("normalize: span is smaller than the track extent");
    }
  }

  SegmentTrack out;
  out.source_id = track.source_id;
  auto push = [&out](double start, double end, const ChordLabel& label) {
    if (!(end > start)) return;
    if (!out.segments.empty()) {
      const double last_end = out.segments.back().end_s;
      if (start - last_end > kTimeTolerance) {
        if (out.segments.back().label.is_no_chord()) {
          out.segments.back().end_s = start;
        } else {
          out.segments.push_back({last_end, start, ChordLabel::no_chord()});
        }
      } else {
        start = last_end;
      }
      if (out.segments.back().label == label) {
        out.segments.back().end_s = end;
        return;
      }
    }
    out.segments.push_back({start, end, label});
  };

  if (span && (track.empty() || span->start_s < track.start() - kTimeTolerance)) {
    push(span->start_s, track.empty() ? span->end_s : track.start(), ChordLabel::no_chord());
  }
  for (const auto& s : track.segments) push(s.start_s, s.end_s, s.label);
  if (span && !track.empty() && span->end_s > track.end() + kTimeTolerance) {
    push(track.end(), span->end_s, ChordLabel::no_chord());
  }
  if (span && !out.segments.empty()) {
    out.segments.front().start_s = span->start_s;
    out.segments.back().end_s = span->end_s;
  }
  return out;
}

SegmentTrack conform_to_span(const SegmentTrack& track, TimeSpan span) {
  if (!(span.end_s > span.start_s)) throw InvalidArgument("conform_to_span: empty span");
  SegmentTrack cropped;
  cropped.source_id = track.source_id;
  for (const auto& s : track.segments) {
    const double a = std::max(s.start_s, span.start_s);
    const double b = std::min(s.end_s, span.end_s);
    if (b > a) cropped.segments.push_back({a, b, s.label});
  }
  return normalize(cropped, span);
}

}  // namespace chordbench
