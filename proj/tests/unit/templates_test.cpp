#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "chordbench/error.h"
#include "chordbench/features.h"
#include "chordbench/synth.h"
#include "chordbench/templates.h"

using namespace chordbench;

namespace {

FeatureMatrix chroma_rows(const std::vector<std::array<double, 12>>& rows) {
  FeatureMatrix f(rows.size(), 12, BinKind::kChroma12, kCqtHop, kCqtSampleRate);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int p = 0; p < 12; ++p) f.at(i, p) = rows[i][p];
  }
  return f;
}

}  // namespace

TEST(Fold, SineAt440FoldsToA) {
  AudioBuffer a;
  a.samples.resize(44100);
  for (std::size_t i = 0; i < a.samples.size(); ++i) a.samples[i] = 0.5 * std::sin(2 * std::numbers::pi * 440.0 * i / 22050);
  const auto folded = fold_to_chroma(log_amplitude(cqt(a)));
  EXPECT_EQ(folded.bins, 12u);
  for (std::size_t i = 0; i < folded.frames; ++i) {
    if (!cqt_frame_is_interior(i, a.samples.size())) continue;
    const auto r = folded.row(i);
    EXPECT_EQ(std::max_element(r.begin(), r.end()) - r.begin(), 9);
  }
}

TEST(Fold, BinMapping) {
  FeatureMatrix f(1, 144, BinKind::kCqtLog, kCqtHop, kCqtSampleRate);
  for (double& v : f.values) v = std::log(kLogEpsilon);
  f.at(0, 0) = 0.0;
  const auto c = fold_to_chroma(f);
  const auto r = c.row(0);
  EXPECT_EQ(std::max_element(r.begin(), r.end()) - r.begin(), 0);
  for (int p = 1; p < 12; ++p) EXPECT_NEAR(r[p], 12 * kLogEpsilon, 1e-15);
  FeatureMatrix silent(1, 144, BinKind::kCqtLog, kCqtHop, kCqtSampleRate);
  for (double& v : silent.values) v = std::log(kLogEpsilon);
  double total = 0;
  for (double v : fold_to_chroma(silent).values) total += v;
  EXPECT_NEAR(total, kFoldedSilenceEnergy, 1e-15);
  EXPECT_THROW(fold_to_chroma(FeatureMatrix(1, 100, BinKind::kCqtLog, kCqtHop, kCqtSampleRate)), InvalidArgument);
}

TEST(Templates, Shapes) {
  const auto t = default_templates();
  for (int r = 0; r < 12; ++r) {
    for (int p = 0; p < 12; ++p) {
      const int d = ((p - r) % 12 + 12) % 12;
      EXPECT_EQ(t.templates[r][p], (d == 0 || d == 4 || d == 7) ? 1.0 : 0.0);
      EXPECT_EQ(t.templates[12 + r][p], (d == 0 || d == 3 || d == 7) ? 1.0 : 0.0);
    }
  }
  for (double v : t.templates[24]) EXPECT_EQ(v, 0.0);
}

TEST(TemplatePredict, Examples) {
  std::array<double, 12> cmaj{};
  cmaj[0] = cmaj[4] = cmaj[7] = 1;
  std::array<double, 12> zero{};
  const auto p = template_predict(chroma_rows({cmaj, zero}), default_templates(0.5));
  EXPECT_EQ(p.classes[0].index(), 0);
  EXPECT_EQ(p.classes[1].index(), 24);
}

TEST(TemplatePredict, TiesGoToLowestIndex) {
  std::array<double, 12> flat{};
  flat.fill(1.0);
  EXPECT_EQ(template_predict(chroma_rows({flat}), default_templates(0.0)).classes[0].index(), 0);
}

TEST(TemplatePredict, RotationEquivariance) {
  std::mt19937_64 rng(73);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  std::vector<std::array<double, 12>> rows(400);
  for (auto& r : rows) {
    for (double& v : r) v = std::pow(d(rng), 3);
  }
  rows[0].fill(0.0);
  const auto base = chroma_rows(rows);
  const auto t = default_templates(track_energy_threshold(base));
  const auto ref = template_predict(base, t);
  for (int k = 0; k < 12; ++k) {
    std::vector<std::array<double, 12>> moved(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (int p = 0; p < 12; ++p) moved[i][(p + k) % 12] = rows[i][p];
    }
    EXPECT_EQ(template_predict(chroma_rows(moved), t).classes, transpose_labels(ref, k).classes) << "k=" << k;
  }
}

TEST(EnergyThreshold, LevelInvariantWithFloor) {
  std::array<double, 12> a{};
  a[0] = 2.0;
  std::array<double, 12> b{};
  b[3] = 4.0;
  const auto t1 = track_energy_threshold(chroma_rows({a, b, a}));
  EXPECT_DOUBLE_EQ(t1, 0.02);
  std::array<double, 12> tiny{};
  tiny.fill(kLogEpsilon);
  EXPECT_DOUBLE_EQ(track_energy_threshold(chroma_rows({tiny})), 2 * kFoldedSilenceEnergy);
}

TEST(ClassesToTrack, Merging) {
  FrameLabels constant;
  constant.classes.assign(10, MajMinClass(3));
  const auto t = classes_to_track(constant, 0.0, 0.1);
  ASSERT_EQ(t.segments.size(), 1u);
  EXPECT_NEAR(t.end(), 1.0, 1e-12);
  FrameLabels alt;
  for (int i = 0; i < 10; ++i) alt.classes.emplace_back(i % 2 ? 12 : 0);
  EXPECT_EQ(classes_to_track(alt, 0.0, 0.1).segments.size(), 10u);
}

TEST(TemplateEndToEnd, RenderedCMajor) {
  SynthSpec spec;
  SegmentTrack t;
  t.segments = {{0.0, 4.0, parse_harte("C:maj")}};
  const auto audio = render_audio(t, spec);
  const auto chroma = fold_to_chroma(log_amplitude(cqt(audio)));
  const auto p = template_predict(chroma, default_templates(track_energy_threshold(chroma)));
  std::size_t interior = 0, hits = 0;
  for (std::size_t i = 0; i < p.classes.size(); ++i) {
    if (!cqt_frame_is_interior(i, audio.samples.size())) continue;
    ++interior;
    hits += p.classes[i].index() == 0;
  }
  ASSERT_GT(interior, 0u);
  EXPECT_GE(static_cast<double>(hits) / interior, 0.99);
}
