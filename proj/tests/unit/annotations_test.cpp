#include <gtest/gtest.h>

#include <random>

#include "chordbench/annotations.h"
#include "chordbench/error.h"
#include "helpers.h"

using namespace chordbench;
using testing_support::TempDir;

namespace {

TimedSegment seg(double a, double b, const char* label) { return {a, b, parse_harte(label)}; }

SegmentTrack random_track(std::mt19937_64& rng, bool gaps) {
  std::uniform_real_distribution<double> dur(0.01, 5.0);
  std::uniform_int_distribution<int> cls(0, 24);
  std::bernoulli_distribution gap(gaps ? 0.3 : 0.0);
  SegmentTrack t;
  double time = std::uniform_real_distribution<double>(0.0, 2.0)(rng);
  const int n = std::uniform_int_distribution<int>(1, 30)(rng);
  for (int i = 0; i < n; ++i) {
    if (gap(rng)) time += dur(rng);
    // Six decimals so the text form is exact.
    const double a = std::round(time * 1e6) / 1e6;
    time += dur(rng);
    const double b = std::round(time * 1e6) / 1e6;
    t.segments.push_back({a, b, label_of(MajMinClass(cls(rng)))});
  }
  return t;
}

}  // namespace

TEST(LabParse, Lines) {
  const auto t = parse_lab("0.0 2.5 C:maj\n2.5\t4.0\tN\n\n");
  ASSERT_EQ(t.segments.size(), 2u);
  EXPECT_EQ(t.segments[0], seg(0.0, 2.5, "C:maj"));
  EXPECT_TRUE(t.segments[1].label.is_no_chord());
}

TEST(LabParse, OverlapNamesBothRows) {
  try {
    parse_lab("0.0 2.0 C:maj\n1.5 3.0 G:maj\n");
    FAIL();
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("1"), std::string::npos);
    EXPECT_NE(msg.find("2"), std::string::npos);
  }
}

TEST(LabParse, Errors) {
  EXPECT_THROW(parse_lab("0.0 C:maj\n"), ParseError);
  EXPECT_THROW(parse_lab("2.0 1.0 C:maj\n"), ParseError);
  EXPECT_THROW(parse_lab("0.0 1.0 X:maj\n"), ParseError);
  EXPECT_THROW(parse_lab("1.0 2.0 C\n0.0 0.5 G\n"), ParseError);
  EXPECT_THROW(read_lab("/nonexistent/file.lab"), IoError);
}

TEST(LabFormat, SixDecimals) {
  SegmentTrack t;
  t.segments = {seg(0.0, 2.5, "C:maj")};
  EXPECT_EQ(format_lab(t), "0.000000\t2.500000\tC:maj\n");
  EXPECT_EQ(format_lab(SegmentTrack{}), "");
}

TEST(LabFormat, RoundTripRandomTracks) {
  std::mt19937_64 rng(3);
  TempDir dir("lab");
  for (int i = 0; i < 100; ++i) {
    const auto t = random_track(rng, true);
    write_lab(t, dir.path() / "t.lab");
    EXPECT_EQ(read_lab(dir.path() / "t.lab"), t);
  }
}

TEST(Csv, ShorthandAndMajMinColumns) {
  const std::string text =
      "start;end;shorthand;extended;majmin;fullname\n"
      "0.0;1.5;C:maj;C:maj;C:maj;C major\n"
      "1.5;3.0;D:min7;D:min7;D:min;D minor seventh\n"
      "3.0;4.0;G:7;G:7;G:maj;G dominant\n";
  const auto s = parse_chord_csv(text, CsvNotation::kShorthand);
  ASSERT_EQ(s.segments.size(), 3u);
  EXPECT_EQ(s.segments[0], seg(0.0, 1.5, "C:maj"));
  EXPECT_EQ(s.segments[1].label, parse_harte("D:min7"));
  const auto m = parse_chord_csv(text, CsvNotation::kMajMin);
  for (const auto& sg : m.segments) {
    const auto q = sg.label.quality();
    ASSERT_TRUE(q.has_value());
    EXPECT_TRUE(q->kind() == QualityKind::kMaj || q->kind() == QualityKind::kMin);
  }
}

TEST(Csv, DelimiterDetection) {
  EXPECT_EQ(detect_delimiter("start,end,shorthand"), ',');
  EXPECT_EQ(detect_delimiter("start;end;shorthand"), ';');
  EXPECT_EQ(detect_delimiter("start\tend\tshorthand"), '\t');
  const auto t = parse_chord_csv("start\tend\tshorthand\n0\t1\tA:min\n", CsvNotation::kShorthand);
  EXPECT_EQ(t.segments.at(0), seg(0, 1, "A:min"));
}

TEST(Csv, MissingColumn) {
  EXPECT_THROW(parse_chord_csv("start,end,shorthand\n0,1,C\n", CsvNotation::kMajMin), ParseError);
  CsvColumns cols;
  cols.start = "onset";
  cols.end = "offset";
  cols.shorthand = "chord";
  const auto t = parse_chord_csv("onset,offset,chord\n0,1,C\n", CsvNotation::kShorthand, cols);
  EXPECT_EQ(t.segments.size(), 1u);
}

TEST(Arff, RowsAndBassNoteException) {
  const std::string text =
      "% comment\n"
      "@relation chords\n"
      "@attribute onset numeric\n"
      "@attribute offset numeric\n"
      "@attribute chord string\n"
      "@data\n"
      "0.0,1.2,'C:maj'\n"
      "1.2,2.0,'BASS NOTE EXCEPTION'\n"
      "2.0,3.5,\"A:min\"\n";
  const auto t = parse_aam_arff(text);
  ASSERT_EQ(t.segments.size(), 3u);
  EXPECT_EQ(t.segments[0], seg(0.0, 1.2, "C:maj"));
  EXPECT_TRUE(t.segments[1].label.is_no_chord());
  EXPECT_EQ(t.segments[2].label, parse_harte("A:min"));
}

TEST(Arff, MissingChordAttribute) {
  EXPECT_THROW(parse_aam_arff("@relation x\n@attribute onset numeric\n@attribute offset numeric\n@data\n0,1\n"),
               ParseError);
}

TEST(Arff, SyntaxErrorHasPosition) {
  try {
    parse_aam_arff("@relation x\n@attribute onset numeric\n@attribute offset numeric\n@attribute chord string\n"
                   "@data\n0.0,abc,'C'\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("6"), std::string::npos);
  }
}

TEST(Arff, ConvertThroughLabPreservesContent) {
  const std::string text =
      "@relation chords\n@attribute onset numeric\n@attribute offset numeric\n"
      "@attribute chord {'C:maj','G:7','BASS NOTE EXCEPTION'}\n@data\n"
      "0.1234567,1.5,'C:maj'\n1.5,2.25,'G:7'\n2.25,3.0,'BASS NOTE EXCEPTION'\n";
  const auto a = parse_aam_arff(text);
  TempDir dir("arff");
  write_lab(a, dir.path() / "a.lab");
  const auto b = read_lab(dir.path() / "a.lab");
  ASSERT_EQ(a.segments.size(), b.segments.size());
  for (std::size_t i = 0; i < a.segments.size(); ++i) {
    EXPECT_NEAR(a.segments[i].start_s, b.segments[i].start_s, 1e-6);
    EXPECT_NEAR(a.segments[i].end_s, b.segments[i].end_s, 1e-6);
    EXPECT_EQ(a.segments[i].label, b.segments[i].label);
  }
}

TEST(Normalize, GapFill) {
  SegmentTrack t;
  t.segments = {seg(1, 2, "C:maj")};
  const auto n = normalize(t, TimeSpan{0, 3});
  ASSERT_EQ(n.segments.size(), 3u);
  EXPECT_EQ(n.segments[0], seg(0, 1, "N"));
  EXPECT_EQ(n.segments[1], seg(1, 2, "C:maj"));
  EXPECT_EQ(n.segments[2], seg(2, 3, "N"));
}

TEST(Normalize, MergesEqualNeighbours) {
  SegmentTrack t;
  t.segments = {seg(0, 1, "C:maj"), seg(1, 2, "C:maj")};
  const auto n = normalize(t);
  ASSERT_EQ(n.segments.size(), 1u);
  EXPECT_EQ(n.segments[0], seg(0, 2, "C:maj"));
}

TEST(Normalize, SpanSmallerThanTrack) {
  SegmentTrack t;
  t.segments = {seg(0, 5, "C:maj")};
  EXPECT_THROW(normalize(t, TimeSpan{1, 4}), InvalidArgument);
}

TEST(Normalize, PropertiesOnRandomTracks) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 300; ++i) {
    const auto t = random_track(rng, true);
    const auto n = normalize(t);
    EXPECT_NO_THROW(validate(n));
    EXPECT_EQ(normalize(n), n);
    for (std::size_t j = 1; j < n.segments.size(); ++j) {
      EXPECT_EQ(n.segments[j].start_s, n.segments[j - 1].end_s);
      EXPECT_NE(n.segments[j].label, n.segments[j - 1].label);
    }
    EXPECT_NEAR(n.end() - n.start(), t.end() - t.start(), 1e-9);
    for (int probe = 0; probe < 20; ++probe) {
      const double x = std::uniform_real_distribution<double>(t.start(), t.end())(rng);
      EXPECT_EQ(n.label_at(x), t.label_at(x));
    }
  }
}

TEST(ConformToSpan, PadsAndCrops) {
  SegmentTrack t;
  t.segments = {seg(0.5, 2, "C:maj"), seg(2, 5, "G:maj")};
  const auto c = conform_to_span(t, TimeSpan{0, 3});
  ASSERT_EQ(c.segments.size(), 3u);
  EXPECT_EQ(c.segments[0], seg(0, 0.5, "N"));
  EXPECT_EQ(c.segments[2], seg(2, 3, "G:maj"));
}
