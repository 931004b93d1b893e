#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "chordbench/features.h"

namespace chordbench {

/// Shape of the self-attention frame labeler.
struct LabelerConfig {
  std::size_t input_dim = kCqtBins;
  std::size_t model_dim = 64;
  std::size_t n_layers = 2;
  std::size_t n_heads = 4;
  std::size_t ff_dim = 128;
  std::size_t context_frames = kWindowFrames;
  std::size_t n_classes = MajMinClass::kCount;
  std::uint64_t seed = 1;

  void validate() const;
  friend bool operator==(const LabelerConfig&, const LabelerConfig&) = default;
};

/// One named weight tensor inside the flat parameter vector.
struct TensorSlot {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t offset = 0;
  std::size_t size() const { return rows * cols; }
};

/// Tensor layout in storage order: input projection, then per layer the
/// attention, first layer norm, feed-forward and second layer norm blocks,
/// then the classifier.
std::vector<TensorSlot> parameter_layout(const LabelerConfig& config);
std::size_t parameter_count(const LabelerConfig& config);

/// All labeler weights in one flat vector, addressable by tensor name.
template <typename T>
struct LabelerParams {
  LabelerConfig config;
  std::vector<T> values;

  /// Xavier-uniform matrices, zero biases, unit layer-norm gains.
  static LabelerParams initialize(const LabelerConfig& config);
  static LabelerParams zeros(const LabelerConfig& config);

  std::span<T> tensor(const std::string& name);
  std::span<const T> tensor(const std::string& name) const;

  template <typename U>
  LabelerParams<U> cast() const {
    LabelerParams<U> out;
    out.config = config;
    out.values.assign(values.begin(), values.end());
    return out;
  }
};

/// A frames x input_dim excerpt with per-frame class targets. Frames at or
/// past `valid_frames` are padding: never attended to, never scored. A label
/// of -1 leaves a valid frame out of the loss.
struct LabeledSequence {
  FeatureMatrix features;
  std::vector<int> labels;
  std::size_t valid_frames = 0;
};

/// Builds a sequence from a window, taking labels from frame labels.
LabeledSequence make_sequence(const FeatureWindow& window, const FrameLabels& labels);

/// Frames x n_classes scores.
template <typename T>
struct ScoreMatrix {
  std::size_t frames = 0;
  std::size_t classes = 0;
  std::vector<T> values;
  T at(std::size_t f, std::size_t c) const { return values[f * classes + c]; }
};

/// Classes the loss may predict; an empty mask means all classes.
using ClassMask = std::vector<bool>;

template <typename T>
ScoreMatrix<T> forward(const LabelerParams<T>& params, const FeatureMatrix& input, std::size_t valid_frames);

/// Attention probabilities of layer `layer`, head `head` (frames x frames).
template <typename T>
std::vector<T> attention_weights(const LabelerParams<T>& params, const FeatureMatrix& input,
                                 std::size_t valid_frames, std::size_t layer, std::size_t head);

/// Row-wise softmax of a score matrix, respecting the class mask.
template <typename T>
ScoreMatrix<T> softmax(const ScoreMatrix<T>& scores, const ClassMask& mask = {});

/// Mean softmax cross-entropy over frames below `valid_frames` whose label
/// is not -1 (and not a masked class).
template <typename T>
T loss(const ScoreMatrix<T>& scores, std::span<const int> labels, std::size_t valid_frames,
       const ClassMask& mask = {});

template <typename T>
struct LossAndGrad {
  T loss = 0;
  std::size_t frames = 0;   // frames counted in the loss
  std::size_t correct = 0;  // argmax hits among them
  std::vector<T> grad;
};

/// Mean loss over every counted frame of the batch and its exact gradient.
template <typename T>
LossAndGrad<T> loss_and_grad(const LabelerParams<T>& params, std::span<const LabeledSequence> batch,
                             const ClassMask& mask = {});

/// Loss and frame accuracy without gradients.
template <typename T>
LossAndGrad<T> evaluate(const LabelerParams<T>& params, std::span<const LabeledSequence> data,
                        const ClassMask& mask = {});

struct TrainHyperparams {
  double learning_rate = 1e-3;
  std::size_t batch_size = 8;
  std::size_t max_epochs = 50;
  std::size_t patience = 5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  /// Stop once training frame accuracy reaches this value (1.0 disables).
  double target_accuracy = 1.0;
};

struct TrainReport {
  std::vector<double> train_loss;
  std::vector<double> validation_loss;
  std::vector<double> train_accuracy;
  std::vector<double> validation_accuracy;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;  // 1-based
  /// Gradient workers; reproducibility is only guaranteed for 1.
  int workers = 1;

  friend bool operator==(const TrainReport&, const TrainReport&) = default;
};

struct LabelerDataset {
  std::vector<LabeledSequence> train;
  /// Early stopping watches this split; the training loss is used when empty.
  std::vector<LabeledSequence> validation;
  ClassMask mask;
};

template <typename T>
struct TrainResult {
  LabelerParams<T> params;  // weights from the best validation epoch
  TrainReport report;
};

/// Adam on shuffled minibatches with patience-based early stopping.
template <typename T>
TrainResult<T> train(const LabelerConfig& config, const LabelerDataset& data, const TrainHyperparams& hyper);

/// Frame classes for a full normalized feature matrix. Overlapping windows
/// of context_frames (half-window stride) are scored and their logits averaged.
template <typename T>
FrameLabels predict_frames(const LabelerParams<T>& params, const FeatureMatrix& features);

}  // namespace chordbench
