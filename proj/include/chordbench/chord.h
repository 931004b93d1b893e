#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace chordbench {

/// Pitch class as a semitone index, 0 = C ... 11 = B.
class PitchClass {
 public:
  constexpr PitchClass() = default;
  /// Reduces any integer modulo 12.
  static constexpr PitchClass wrap(int semitones) {
    return PitchClass(static_cast<std::uint8_t>(((semitones % 12) + 12) % 12));
  }
  constexpr int value() const { return value_; }
  constexpr PitchClass shifted(int semitones) const { return wrap(value_ + semitones); }
  friend constexpr bool operator==(PitchClass, PitchClass) = default;

 private:
  constexpr explicit PitchClass(std::uint8_t v) : value_(v) {}
  std::uint8_t value_ = 0;
};

/// Set of pitch classes as a 12-bit mask (bit p set when pitch class p is present).
class PitchClassSet {
 public:
  constexpr PitchClassSet() = default;
  constexpr explicit PitchClassSet(std::uint16_t mask) : mask_(mask & 0x0FFF) {}

  constexpr void insert(PitchClass p) { mask_ |= static_cast<std::uint16_t>(1u << p.value()); }
  constexpr bool contains(PitchClass p) const { return (mask_ >> p.value()) & 1u; }
  constexpr std::uint16_t mask() const { return mask_; }
  constexpr bool empty() const { return mask_ == 0; }
  int size() const;
  PitchClassSet rotated(int semitones) const;

  constexpr PitchClassSet operator&(PitchClassSet o) const { return PitchClassSet(mask_ & o.mask_); }
  constexpr PitchClassSet operator|(PitchClassSet o) const { return PitchClassSet(mask_ | o.mask_); }
  /// Set difference.
  constexpr PitchClassSet operator-(PitchClassSet o) const {
    return PitchClassSet(static_cast<std::uint16_t>(mask_ & ~o.mask_));
  }
  friend constexpr bool operator==(PitchClassSet, PitchClassSet) = default;

 private:
  std::uint16_t mask_ = 0;
};

enum class QualityKind : std::uint8_t {
  kMaj,
  kMin,
  kDim,
  kAug,
  kSus2,
  kSus4,
  kMaj7,
  kMin7,
  kDom7,
  kMaj6,
  kMin6,
  kOther,
};

/// Chord quality: a named kind or an explicit interval set above the root.
///
/// Named kinds always carry their canonical interval mask, so two qualities
/// compare equal exactly when kind and intervals agree. Parsing canonicalizes
/// an explicit interval list that matches a named kind to that kind.
class ChordQuality {
 public:
  constexpr ChordQuality() = default;
  static ChordQuality named(QualityKind kind);
  /// Builds from an interval mask (bit i = i semitones above root). Bit 0 is
  /// forced on. Returns the named kind when the mask matches one.
  static ChordQuality from_intervals(std::uint16_t mask);

  QualityKind kind() const { return kind_; }
  /// Interval mask relative to the root.
  std::uint16_t intervals() const { return intervals_; }
  bool has_interval(int semitones) const { return (intervals_ >> semitones) & 1u; }

  friend bool operator==(const ChordQuality&, const ChordQuality&) = default;

 private:
  ChordQuality(QualityKind kind, std::uint16_t intervals) : kind_(kind), intervals_(intervals) {}
  QualityKind kind_ = QualityKind::kMaj;
  std::uint16_t intervals_ = 0b000010010001;
};

/// Index into the 25-class major/minor vocabulary.
/// 0-11 major chords on C..B, 12-23 minor chords on C..B, 24 no-chord.
class MajMinClass {
 public:
  static constexpr int kCount = 25;
  static constexpr int kNoChord = 24;

  constexpr MajMinClass() = default;
  constexpr explicit MajMinClass(int index) : index_(static_cast<std::uint8_t>(index)) {}
  static constexpr MajMinClass major(PitchClass root) { return MajMinClass(root.value()); }
  static constexpr MajMinClass minor(PitchClass root) { return MajMinClass(12 + root.value()); }
  static constexpr MajMinClass no_chord() { return MajMinClass(kNoChord); }

  constexpr int index() const { return index_; }
  constexpr bool is_no_chord() const { return index_ == kNoChord; }
  constexpr bool is_minor() const { return index_ >= 12 && index_ < 24; }
  /// Root for chord classes; undefined for N.
  constexpr PitchClass root() const { return PitchClass::wrap(index_ % 12); }
  /// Same family, root moved by `semitones`; N stays N.
  constexpr MajMinClass transposed(int semitones) const {
    if (is_no_chord()) return *this;
    const int family = index_ >= 12 ? 12 : 0;
    return MajMinClass(family + PitchClass::wrap(index_ + semitones).value());
  }
  /// "C:maj", "A:min", "N".
  std::string name() const;

  friend constexpr bool operator==(MajMinClass, MajMinClass) = default;

 private:
  std::uint8_t index_ = kNoChord;
};

/// Parsed chord symbol: root + quality + optional bass interval, or no-chord.
class ChordLabel {
 public:
  /// The "N" label.
  static ChordLabel no_chord() { return ChordLabel(); }
  static ChordLabel chord(PitchClass root, ChordQuality quality,
                          std::optional<int> bass_interval = std::nullopt);

  bool is_no_chord() const { return !root_.has_value(); }
  std::optional<PitchClass> root() const { return root_; }
  std::optional<ChordQuality> quality() const { return quality_; }
  /// Semitones above the root, 0..11.
  std::optional<int> bass() const { return bass_; }

  friend bool operator==(const ChordLabel&, const ChordLabel&) = default;

 private:
  ChordLabel() = default;
  std::optional<PitchClass> root_;
  std::optional<ChordQuality> quality_;
  std::optional<int> bass_;
};

/// Parses a Harte-style label (e.g. "C:maj", "Db:min7", "G/5", "N",
/// "A:(1,b3,5,b7)", "E:maj(9)"). Throws ParseError naming the bad token.
ChordLabel parse_harte(std::string_view text);

/// Canonical rendering: sharps for roots, shorthand when the quality is a
/// named kind, a degree list otherwise. parse_harte(render_harte(l)) == l.
std::string render_harte(const ChordLabel& label);

/// Parses a note name "C", "F#", "Bb", "Cbb" to a pitch class.
PitchClass parse_note_name(std::string_view text);

/// Semitone value of a Harte degree token ("3", "b7", "#11").
int parse_degree(std::string_view text);

PitchClassSet pitch_class_set(const ChordLabel& label);
MajMinClass to_majmin(const ChordLabel& label);
ChordLabel transpose(const ChordLabel& label, int semitones);
std::optional<PitchClass> root_of(const ChordLabel& label);

/// Representative label of a vocabulary class ("C:maj", "C#:min", "N").
ChordLabel label_of(MajMinClass cls);

/// All 25 vocabulary classes in index order.
std::array<MajMinClass, MajMinClass::kCount> all_majmin_classes();

}  // namespace chordbench
