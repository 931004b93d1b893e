#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "chordbench/error.h"
#include "chordbench/labeler.h"
#include "chordbench/templates.h"
#include "labeler_fixtures.h"

using namespace chordbench;
using testing_support::random_sequence;
using testing_support::tiny_config;

namespace {

std::vector<LabeledSequence> random_batch(std::uint64_t seed, std::size_t count, std::size_t frames,
                                          std::size_t dim) {
  std::mt19937_64 rng(seed);
  std::vector<LabeledSequence> batch;
  for (std::size_t i = 0; i < count; ++i) batch.push_back(random_sequence(rng, frames, dim, frames - i % 2));
  return batch;
}

// A toy problem whose label is the sign pattern of the first two inputs.
std::vector<LabeledSequence> separable_batch(std::size_t dim) {
  std::mt19937_64 rng(3);
  auto batch = random_batch(3, 4, 5, dim);
  for (auto& s : batch) {
    for (std::size_t i = 0; i < s.features.frames; ++i) {
      const double a = s.features.at(i, 0), b = s.features.at(i, 1);
      s.features.at(i, 0) = a >= 0 ? 2.0 : -2.0;
      s.labels[i] = i < s.valid_frames ? (a >= 0 ? 0 : 12) + (b >= 0 ? 0 : 5) : -1;
    }
  }
  return batch;
}

}  // namespace

TEST(LabelerConfig, Validation) {
  auto c = tiny_config();
  EXPECT_NO_THROW(c.validate());
  c.n_heads = 3;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = tiny_config();
  c.model_dim = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(LabelerParams, LayoutIsContiguous) {
  const auto c = tiny_config();
  const auto layout = parameter_layout(c);
  std::size_t offset = 0;
  for (const auto& slot : layout) {
    EXPECT_EQ(slot.offset, offset) << slot.name;
    offset += slot.size();
  }
  EXPECT_EQ(offset, parameter_count(c));
  EXPECT_LE(parameter_count(c), 2000u);
  EXPECT_EQ(layout.front().name, "input.weight");
  EXPECT_EQ(layout.back().name, "classifier.bias");
  const auto p = LabelerParams<double>::initialize(c);
  EXPECT_EQ(p.values.size(), parameter_count(c));
  for (double v : p.tensor("layer0.norm1.gain")) EXPECT_EQ(v, 1.0);
  for (double v : p.tensor("classifier.bias")) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(p.tensor("nope"), InvalidArgument);
  EXPECT_EQ(p.values, LabelerParams<double>::initialize(c).values);
}

TEST(Forward, ShapeAndErrors) {
  const auto c = tiny_config();
  const auto p = LabelerParams<double>::initialize(c);
  const auto batch = random_batch(1, 1, 7, c.input_dim);
  const auto s = forward(p, batch[0].features, 7);
  EXPECT_EQ(s.frames, 7u);
  EXPECT_EQ(s.classes, 25u);
  EXPECT_EQ(s.values.size(), 7u * 25u);
  const auto wrong = random_batch(1, 1, 7, c.input_dim + 1);
  EXPECT_THROW(forward(p, wrong[0].features, 7), InvalidArgument);
  EXPECT_THROW(forward(p, batch[0].features, 8), InvalidArgument);
}

TEST(Forward, ZeroWeightsGiveUniformScores) {
  const auto c = tiny_config();
  const auto p = LabelerParams<double>::zeros(c);
  FeatureMatrix zero(4, c.input_dim, BinKind::kCqtLog, kCqtHop, kCqtSampleRate);
  const auto s = forward(p, zero, 4);
  for (std::size_t f = 0; f < 4; ++f) {
    for (std::size_t k = 1; k < 25; ++k) EXPECT_EQ(s.at(f, k), s.at(f, 0));
  }
  const std::vector<int> labels{0, 3, 24, 7};
  EXPECT_NEAR(loss(s, std::span<const int>(labels), 4), std::log(25.0), 1e-12);
}

TEST(Forward, PaddingDoesNotLeakIntoValidFrames) {
  const auto c = tiny_config();
  const auto p = LabelerParams<double>::initialize(c);
  auto batch = random_batch(5, 1, 6, c.input_dim);
  const auto a = forward(p, batch[0].features, 4);
  for (std::size_t b = 0; b < c.input_dim; ++b) {
    batch[0].features.at(4, b) = 100.0;
    batch[0].features.at(5, b) = -3.0;
  }
  const auto b = forward(p, batch[0].features, 4);
  for (std::size_t f = 0; f < 4; ++f) {
    for (std::size_t k = 0; k < 25; ++k) EXPECT_DOUBLE_EQ(a.at(f, k), b.at(f, k));
  }
}

TEST(Forward, SoftmaxAndAttentionRowsSumToOne) {
  const auto c = tiny_config();
  const auto p = LabelerParams<double>::initialize(c);
  const auto batch = random_batch(8, 1, 9, c.input_dim);
  const auto probs = softmax(forward(p, batch[0].features, 7));
  for (std::size_t f = 0; f < probs.frames; ++f) {
    double sum = 0;
    for (std::size_t k = 0; k < 25; ++k) sum += probs.at(f, k);
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
  for (std::size_t l = 0; l < c.n_layers; ++l) {
    for (std::size_t h = 0; h < c.n_heads; ++h) {
      const auto w = attention_weights(p, batch[0].features, 7, l, h);
      ASSERT_EQ(w.size(), 81u);
      for (std::size_t i = 0; i < 9; ++i) {
        double sum = 0;
        for (std::size_t j = 0; j < 9; ++j) {
          sum += w[i * 9 + j];
          if (j >= 7) {
            EXPECT_EQ(w[i * 9 + j], 0.0);
          }
        }
        EXPECT_NEAR(sum, 1.0, 1e-9);
      }
    }
  }
  EXPECT_THROW(attention_weights(p, batch[0].features, 7, 2, 0), InvalidArgument);
}

TEST(Loss, HandComputedTwoFrames) {
  ScoreMatrix<double> s{2, 25, std::vector<double>(50, 0.0)};
  for (int k = 0; k < 25; ++k) {
    s.values[k] = 0.1 * k;
    s.values[25 + k] = std::sin(k);
  }
  const std::vector<int> labels{3, 20};
  long double expected = 0;
  for (int f = 0; f < 2; ++f) {
    long double z = 0;
    for (int k = 0; k < 25; ++k) z += std::exp(static_cast<long double>(s.values[f * 25 + k]));
    expected += std::log(z) - s.values[f * 25 + labels[f]];
  }
  expected /= 2;
  EXPECT_NEAR(loss(s, std::span<const int>(labels), 2), static_cast<double>(expected), 1e-9);
  // Padding and ignored labels drop out.
  const std::vector<int> one{3, -1};
  long double z0 = 0;
  for (int k = 0; k < 25; ++k) z0 += std::exp(static_cast<long double>(s.values[k]));
  EXPECT_NEAR(loss(s, std::span<const int>(one), 2), static_cast<double>(std::log(z0) - s.values[3]), 1e-12);
  EXPECT_NEAR(loss(s, std::span<const int>(labels), 1), static_cast<double>(std::log(z0) - s.values[3]), 1e-12);
  const std::vector<int> short_labels{3};
  EXPECT_THROW(loss(s, std::span<const int>(short_labels), 1), InvalidArgument);
}

TEST(Loss, ConfidentCorrectScoresApproachZero) {
  ScoreMatrix<double> s{1, 25, std::vector<double>(25, 0.0)};
  s.values[4] = 60.0;
  const std::vector<int> labels{4};
  EXPECT_LT(loss(s, std::span<const int>(labels), 1), 1e-20);
}

TEST(Gradient, MatchesFiniteDifferences) {
  const auto c = tiny_config();
  const auto p = LabelerParams<double>::initialize(c);
  const auto batch = random_batch(21, 2, 5, c.input_dim);
  EXPECT_LE(testing_support::max_gradient_error(p, batch), 1e-4);
}

TEST(Gradient, FiniteDifferenceResidualIsSecondOrder) {
  // Any instance: shrinking the step tenfold must shrink the worst
  // mismatch about a hundredfold, which rules out a wrong gradient.
  for (std::uint64_t seed : {2, 6, 9}) {
    auto c = tiny_config();
    c.seed = seed;
    const auto p = LabelerParams<double>::initialize(c);
    const auto batch = random_batch(seed * 7, 2, 5, c.input_dim);
    const double coarse = testing_support::max_gradient_error(p, batch, 1e-3);
    const double fine = testing_support::max_gradient_error(p, batch, 1e-4);
    EXPECT_LT(fine, coarse / 20) << "seed " << seed;
    EXPECT_LT(fine, 1e-4) << "seed " << seed;
  }
}

TEST(Gradient, MaskedClassHasZeroGradient) {
  const auto c = tiny_config();
  const auto p = LabelerParams<double>::initialize(c);
  auto batch = random_batch(4, 2, 5, c.input_dim);
  ClassMask mask(25, true);
  mask[9] = false;
  const auto g = loss_and_grad(p, std::span<const LabeledSequence>(batch), mask).grad;
  const auto slots = parameter_layout(c);
  for (const auto& slot : slots) {
    if (slot.name == "classifier.weight") {
      for (std::size_t r = 0; r < slot.rows; ++r) EXPECT_EQ(g[slot.offset + r * slot.cols + 9], 0.0);
    }
    if (slot.name == "classifier.bias") {
      EXPECT_EQ(g[slot.offset + 9], 0.0);
    }
  }
  EXPECT_LE(testing_support::max_gradient_error(p, batch, 1e-3, 1e-6, mask), 1e-4);
}

TEST(Gradient, BatchOrderDoesNotMatter) {
  const auto c = tiny_config();
  const auto p = LabelerParams<double>::initialize(c);
  auto batch = random_batch(6, 3, 5, c.input_dim);
  const auto a = loss_and_grad(p, std::span<const LabeledSequence>(batch));
  std::reverse(batch.begin(), batch.end());
  const auto b = loss_and_grad(p, std::span<const LabeledSequence>(batch));
  EXPECT_NEAR(a.loss, b.loss, 1e-12);
  for (std::size_t i = 0; i < a.grad.size(); ++i) EXPECT_NEAR(a.grad[i], b.grad[i], 1e-12);
}

TEST(Gradient, VanishesAtSeparableMinimum) {
  auto c = tiny_config();
  const auto data = LabelerDataset{separable_batch(c.input_dim), {}, {}};
  TrainHyperparams h;
  h.learning_rate = 0.05;
  h.batch_size = data.train.size();
  h.max_epochs = 10000;
  h.patience = 10000;
  const auto result = train<double>(c, data, h);
  const auto lg = loss_and_grad(result.params, std::span<const LabeledSequence>(data.train));
  double norm = 0;
  for (double g : lg.grad) norm += g * g;
  EXPECT_EQ(lg.correct, lg.frames);
  EXPECT_LE(std::sqrt(norm), 1e-6);
}

TEST(Train, PatienceZeroStopsAtFirstNonImprovement) {
  auto c = tiny_config();
  LabelerDataset data;
  data.train = random_batch(30, 6, 5, c.input_dim);
  data.validation = random_batch(31, 4, 5, c.input_dim);
  TrainHyperparams h;
  h.learning_rate = 0.01;
  h.batch_size = 2;
  h.max_epochs = 100;
  h.patience = 0;
  const auto r = train<float>(c, data, h);
  const auto& val = r.report.validation_loss;
  ASSERT_LT(r.report.epochs_run, 100u);
  ASSERT_EQ(val.size(), r.report.epochs_run);
  for (std::size_t e = 1; e + 1 < val.size(); ++e) EXPECT_LT(val[e], val[e - 1]);
  EXPECT_GE(val.back(), val[val.size() - 2]);
  EXPECT_EQ(r.report.best_epoch, r.report.epochs_run - 1);
}

TEST(Train, RestoresBestWeights) {
  auto c = tiny_config();
  LabelerDataset data;
  data.train = random_batch(40, 6, 5, c.input_dim);
  data.validation = random_batch(41, 4, 5, c.input_dim);
  TrainHyperparams h;
  h.learning_rate = 0.01;
  h.max_epochs = 40;
  h.patience = 3;
  const auto r = train<double>(c, data, h);
  const auto ev = evaluate(r.params, std::span<const LabeledSequence>(data.validation));
  EXPECT_NEAR(ev.loss, r.report.validation_loss[r.report.best_epoch - 1], 1e-12);
}

TEST(Train, DeterministicGivenSeed) {
  auto c = tiny_config();
  LabelerDataset data;
  data.train = random_batch(50, 5, 5, c.input_dim);
  TrainHyperparams h;
  h.max_epochs = 8;
  const auto a = train<float>(c, data, h);
  const auto b = train<float>(c, data, h);
  EXPECT_EQ(a.report, b.report);
  EXPECT_EQ(a.params.values, b.params.values);
  EXPECT_EQ(a.report.workers, 1);
  c.seed = 12;
  EXPECT_NE(train<float>(c, data, h).params.values, a.params.values);
}

TEST(Train, FullBatchLossIsMonotone) {
  auto c = tiny_config();
  LabelerDataset data;
  data.train = random_batch(60, 4, 5, c.input_dim);
  TrainHyperparams h;
  h.learning_rate = 1e-3;
  h.batch_size = data.train.size();
  h.max_epochs = 60;
  h.patience = 60;
  const auto r = train<double>(c, data, h);
  ASSERT_EQ(r.report.epochs_run, 60u);
  for (std::size_t e = 1; e < r.report.train_loss.size(); ++e) {
    EXPECT_LE(r.report.train_loss[e], r.report.train_loss[e - 1]) << "epoch " << e + 1;
  }
}

TEST(Train, Errors) {
  const auto c = tiny_config();
  EXPECT_THROW(train<float>(c, LabelerDataset{}, TrainHyperparams{}), InvalidArgument);
  LabelerDataset data;
  data.train = random_batch(1, 1, 5, c.input_dim);
  TrainHyperparams h;
  h.learning_rate = 1e12;
  h.max_epochs = 50;
  EXPECT_THROW(train<float>(c, data, h), NumericError);
}

TEST(PredictFrames, FollowsClassifierBias) {
  auto c = tiny_config();
  c.context_frames = 4;
  auto p = LabelerParams<double>::zeros(c);
  p.tensor("classifier.bias")[7] = 1.0;
  const auto batch = random_batch(2, 1, 11, c.input_dim);
  const auto frames = predict_frames(p, batch[0].features);
  ASSERT_EQ(frames.classes.size(), 11u);
  for (auto k : frames.classes) EXPECT_EQ(k.index(), 7);
  EXPECT_EQ(classes_to_track(frames, 0.0, 0.1).segments.size(), 1u);
}

TEST(PredictFrames, TiesResolveToLowestClass) {
  const auto c = tiny_config();
  const auto p = LabelerParams<double>::zeros(c);
  const auto batch = random_batch(2, 1, 6, c.input_dim);
  for (auto k : predict_frames(p, batch[0].features).classes) EXPECT_EQ(k.index(), 0);
}
