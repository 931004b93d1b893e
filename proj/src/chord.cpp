#include "chordbench/chord.h"

#include <bit>
#include <cctype>
#include <string>
#include <vector>

#include "chordbench/error.h"

namespace chordbench {

namespace {

constexpr std::uint16_t mask_of(std::initializer_list<int> intervals) {
  std::uint16_t m = 0;
  for (int i : intervals) m |= static_cast<std::uint16_t>(1u << (i % 12));
  return m;
}

struct NamedQuality {
  QualityKind kind;
  const char* shorthand;
  std::uint16_t mask;
};

// Named kinds, in enum order. Rendering uses these shorthands.
constexpr NamedQuality kNamed[] = {
    {QualityKind::kMaj, "maj", mask_of({0, 4, 7})},
    {QualityKind::kMin, "min", mask_of({0, 3, 7})},
    {QualityKind::kDim, "dim", mask_of({0, 3, 6})},
    {QualityKind::kAug, "aug", mask_of({0, 4, 8})},
    {QualityKind::kSus2, "sus2", mask_of({0, 2, 7})},
    {QualityKind::kSus4, "sus4", mask_of({0, 5, 7})},
    {QualityKind::kMaj7, "maj7", mask_of({0, 4, 7, 11})},
    {QualityKind::kMin7, "min7", mask_of({0, 3, 7, 10})},
    {QualityKind::kDom7, "7", mask_of({0, 4, 7, 10})},
    {QualityKind::kMaj6, "maj6", mask_of({0, 4, 7, 9})},
    {QualityKind::kMin6, "min6", mask_of({0, 3, 7, 9})},
};

// Further shorthands accepted on input; they parse to explicit interval sets.
struct ExtraShorthand {
  const char* shorthand;
  std::uint16_t mask;
};

constexpr ExtraShorthand kExtra[] = {
    {"dim7", mask_of({0, 3, 6, 9})},
    {"hdim7", mask_of({0, 3, 6, 10})},
    {"minmaj7", mask_of({0, 3, 7, 11})},
    {"aug7", mask_of({0, 4, 8, 10})},
    {"9", mask_of({0, 4, 7, 10, 14})},
    {"maj9", mask_of({0, 4, 7, 11, 14})},
    {"min9", mask_of({0, 3, 7, 10, 14})},
    {"11", mask_of({0, 4, 7, 10, 14, 17})},
    {"min11", mask_of({0, 3, 7, 10, 14, 17})},
    {"13", mask_of({0, 4, 7, 10, 14, 21})},
    {"maj13", mask_of({0, 4, 7, 11, 14, 21})},
    {"min13", mask_of({0, 3, 7, 10, 14, 21})},
    {"5", mask_of({0, 7})},
    {"1", mask_of({0})},
};

constexpr const char* kSharpNames[12] = {"C",  "C#", "D",  "D#", "E",  "F",
                                         "F#", "G",  "G#", "A",  "A#", "B"};

// Degree spelling used when rendering interval sets and bass notes.
constexpr const char* kDegreeNames[12] = {"1",  "b2", "2", "b3", "3",  "4",
                                          "b5", "5",  "#5", "6", "b7", "7"};

std::uint16_t lookup_shorthand(std::string_view s, bool& found) {
  found = true;
  for (const auto& q : kNamed) {
    if (s == q.shorthand) return q.mask;
  }
  for (const auto& q : kExtra) {
    if (s == q.shorthand) return q.mask;
  }
  found = false;
  return 0;
}

[[noreturn]] void fail(std::string_view label, std::string_view token, std::string_view why) {
  throw ParseError("malformed chord label '" + std::string(label) + "': " + std::string(why) +
                   " at '" + std::string(token) + "'");
}

std::uint16_t apply_degree_list(std::string_view label, std::string_view list,
                                std::uint16_t mask) {
  std::size_t pos = 0;
  while (pos <= list.size()) {
    std::size_t comma = list.find(',', pos);
    if (comma == std::string_view::npos) comma = list.size();
    std::string_view item = list.substr(pos, comma - pos);
    while (!item.empty() && std::isspace(static_cast<unsigned char>(item.front())))
      item.remove_prefix(1);
    while (!item.empty() && std::isspace(static_cast<unsigned char>(item.back())))
      item.remove_suffix(1);
    if (item.empty()) fail(label, list, "empty degree");
    bool omit = false;
    if (item.front() == '*') {
      omit = true;
      item.remove_prefix(1);
    }
    int semis = 0;
    try {
      semis = parse_degree(item);
    } catch (const ParseError&) {
      fail(label, item, "bad degree");
    }
    const auto bit = static_cast<std::uint16_t>(1u << semis);
    if (omit) {
      mask = static_cast<std::uint16_t>(mask & ~bit);
    } else {
      mask |= bit;
    }
    pos = comma + 1;
  }
  return mask;
}

}  // namespace

int PitchClassSet::size() const { return std::popcount(mask_); }

PitchClassSet PitchClassSet::rotated(int semitones) const {
  PitchClassSet out;
  for (int p = 0; p < 12; ++p) {
    if ((mask_ >> p) & 1u) out.insert(PitchClass::wrap(p + semitones));
  }
  return out;
}

ChordQuality ChordQuality::named(QualityKind kind) {
  if (kind == QualityKind::kOther) throw InvalidArgument("ChordQuality::named: kOther has no fixed intervals");
  const auto& q = kNamed[static_cast<int>(kind)];
  return ChordQuality(q.kind, q.mask);
}

ChordQuality ChordQuality::from_intervals(std::uint16_t mask) {
  mask &= 0x0FFF;
  for (const auto& q : kNamed) {
    if (q.mask == mask) return ChordQuality(q.kind, q.mask);
  }
  return ChordQuality(QualityKind::kOther, mask);
}

std::string MajMinClass::name() const {
  if (is_no_chord()) return "N";
  return std::string(kSharpNames[index_ % 12]) + (is_minor() ? ":min" : ":maj");
}

ChordLabel ChordLabel::chord(PitchClass root, ChordQuality quality, std::optional<int> bass_interval) {
  ChordLabel l;
  l.root_ = root;
  l.quality_ = quality;
  if (bass_interval) l.bass_ = PitchClass::wrap(*bass_interval).value();
  return l;
}

PitchClass parse_note_name(std::string_view text) {
  if (text.empty()) throw ParseError("empty note name");
  int base = 0;
  switch (text[0]) {
    case 'C': base = 0; break;
    case 'D': base = 2; break;
    case 'E': base = 4; break;
    case 'F': base = 5; break;
    case 'G': base = 7; break;
    case 'A': base = 9; break;
    case 'B': base = 11; break;
    default:
      throw ParseError("bad note name '" + std::string(text) + "'");
  }
  for (std::size_t i = 1; i < text.size(); ++i) {
    if (text[i] == '#') {
      ++base;
    } else if (text[i] == 'b') {
      --base;
    } else {
      throw ParseError("bad note name '" + std::string(text) + "'");
    }
  }
  return PitchClass::wrap(base);
}

int parse_degree(std::string_view text) {
  int modifier = 0;
  std::size_t i = 0;
  for (; i < text.size() && (text[i] == '#' || text[i] == 'b'); ++i) {
    modifier += text[i] == '#' ? 1 : -1;
  }
  std::string_view digits = text.substr(i);
  if (digits.empty() || digits.size() > 2) throw ParseError("bad degree '" + std::string(text) + "'");
  int degree = 0;
  for (char c : digits) {
    if (!std::isdigit(static_cast<unsigned char>(c))) throw ParseError("bad degree '" + std::string(text) + "'");
    degree = degree * 10 + (c - '0');
  }
  if (degree < 1 || degree > 13) throw ParseError("bad degree '" + std::string(text) + "'");
  // Major-scale semitones for degrees 1..7; compound degrees fold down an octave.
  static constexpr int kScale[7] = {0, 2, 4, 5, 7, 9, 11};
  const int semis = kScale[(degree - 1) % 7] + modifier;
  return PitchClass::wrap(semis).value();
}

ChordLabel parse_harte(std::string_view text) {
  if (text.empty()) throw ParseError("malformed chord label: empty string");
  if (text == "N") return ChordLabel::no_chord();

  std::string_view rest = text;
  std::size_t root_end = 0;
  while (root_end < rest.size() && rest[root_end] != ':' && rest[root_end] != '/') ++root_end;
  std::string_view root_token = rest.substr(0, root_end);
  PitchClass root;
  try {
    root = parse_note_name(root_token);
  } catch (const ParseError&) {
    fail(text, root_token.empty() ? text : root_token, "bad root");
  }
  rest.remove_prefix(root_end);

  std::uint16_t mask = kNamed[0].mask;
  if (!rest.empty() && rest.front() == ':') {
    rest.remove_prefix(1);
    std::size_t q_end = rest.find('/');
    if (q_end == std::string_view::npos) q_end = rest.size();
    std::string_view qtext = rest.substr(0, q_end);
    rest.remove_prefix(q_end);
    if (qtext.empty()) fail(text, ":", "missing quality");

    const std::size_t paren = qtext.find('(');
    std::string_view shorthand = qtext.substr(0, paren);
    if (shorthand.empty()) {
      mask = 0;
    } else {
      bool found = false;
      mask = lookup_shorthand(shorthand, found);
      if (!found) fail(text, shorthand, "unknown quality");
    }
    if (paren != std::string_view::npos) {
      if (qtext.back() != ')') fail(text, qtext.substr(paren), "unterminated degree list");
      mask = apply_degree_list(text, qtext.substr(paren + 1, qtext.size() - paren - 2), mask);
    }
  }

  std::optional<int> bass;
  if (!rest.empty()) {
    if (rest.front() != '/') fail(text, rest, "unexpected token");
    std::string_view btext = rest.substr(1);
    if (btext.empty()) fail(text, "/", "missing bass degree");
    try {
      bass = parse_degree(btext);
    } catch (const ParseError&) {
      fail(text, btext, "bad bass degree");
    }
  }

  mask &= 0x0FFF;
  if (mask == 0) fail(text, text, "empty interval set");
  return ChordLabel::chord(root, ChordQuality::from_intervals(mask), bass);
}

std::string render_harte(const ChordLabel& label) {
  if (label.is_no_chord()) return "N";
  std::string out = kSharpNames[label.root()->value()];
  out += ':';
  const ChordQuality q = *label.quality();
  if (q.kind() != QualityKind::kOther) {
    out += kNamed[static_cast<int>(q.kind())].shorthand;
  } else {
    out += '(';
    bool first = true;
    for (int i = 0; i < 12; ++i) {
      if (!q.has_interval(i)) continue;
      if (!first) out += ',';
      out += kDegreeNames[i];
      first = false;
    }
    out += ')';
  }
  if (label.bass()) {
    out += '/';
    out += kDegreeNames[*label.bass()];
  }
  return out;
}

PitchClassSet pitch_class_set(const ChordLabel& label) {
  PitchClassSet set;
  if (label.is_no_chord()) return set;
  const PitchClass root = *label.root();
  const ChordQuality q = *label.quality();
  for (int i = 0; i < 12; ++i) {
    if (q.has_interval(i)) set.insert(root.shifted(i));
  }
  if (label.bass()) set.insert(root.shifted(*label.bass()));
  return set;
}

MajMinClass to_majmin(const ChordLabel& label) {
  if (label.is_no_chord()) return MajMinClass::no_chord();
  const ChordQuality q = *label.quality();
  // Major third wins when both thirds are present (e.g. a #9 extension).
  if (q.has_interval(4)) return MajMinClass::major(*label.root());
  if (q.has_interval(3)) return MajMinClass::minor(*label.root());
  return MajMinClass::major(*label.root());
}

ChordLabel transpose(const ChordLabel& label, int semitones) {
  if (label.is_no_chord()) return label;
  return ChordLabel::chord(label.root()->shifted(semitones), *label.quality(), label.bass());
}

std::optional<PitchClass> root_of(const ChordLabel& label) { return label.root(); }

ChordLabel label_of(MajMinClass cls) {
  if (cls.is_no_chord()) return ChordLabel::no_chord();
  return ChordLabel::chord(cls.root(), ChordQuality::named(cls.is_minor() ? QualityKind::kMin : QualityKind::kMaj));
}

std::array<MajMinClass, MajMinClass::kCount> all_majmin_classes() {
  std::array<MajMinClass, MajMinClass::kCount> out{};
  for (int i = 0; i < MajMinClass::kCount; ++i) out[i] = MajMinClass(i);
  return out;
}

}  // namespace chordbench
