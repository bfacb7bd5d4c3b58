#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ppdl/dataset.hpp"
#include "ppdl/image.hpp"

namespace ppdl::nn {

struct Shape {
  int channels = 0;
  int height = 0;
  int width = 0;

  std::size_t size() const { return static_cast<std::size_t>(channels) * height * width; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

enum class LayerKind : std::uint8_t { Conv2d = 1, Dense = 2, Relu = 3, MaxPool2x2 = 4, Flatten = 5, Softmax = 6 };

/// What to build: `units` is the output channel count for Conv2d and the
/// output width for Dense; other kinds ignore it.
struct LayerSpec {
  LayerKind kind;
  int units = 0;
};

/// A constructed layer with resolved shapes and its slice of the parameter vector.
struct Layer {
  LayerKind kind;
  Shape in;
  Shape out;
  std::size_t weight_offset = 0;
  std::size_t weight_count = 0;
  std::size_t bias_offset = 0;
  std::size_t bias_count = 0;

  friend bool operator==(const Layer&, const Layer&) = default;
};

/// Sequential network over a flat parameter vector.
///
/// Conv2d is 3x3, stride 1, zero padding 1 (weights [out][in][3][3]).
/// Dense weights are [out][in]. MaxPool2x2 has stride 2 and floors odd sizes.
/// The last layer is always Softmax over a 1x1xK shape.
class Network {
 public:
  /// Throws ShapeError when the layer list does not compose.
  static Network build(Shape input, const std::vector<LayerSpec>& specs);

  Shape input_shape() const { return input_; }
  int num_classes() const { return layers_.back().out.channels; }
  const std::vector<Layer>& layers() const { return layers_; }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::size_t param_count() const { return params_.size(); }

  friend bool operator==(const Network&, const Network&) = default;

 private:
  Shape input_;
  std::vector<Layer> layers_;
  std::vector<double> params_;
};

/// conv3x3x8 > relu > maxpool > conv3x3x16 > relu > maxpool > flatten >
/// dense64 > relu > dense(num_classes) > softmax, He-normal weights, zero biases.
/// input_size >= 8.
Network build_default_net(int input_size, int channels, int num_classes, std::uint64_t seed);

/// Re-draws every weight He-normal (std = sqrt(2 / fan_in)) and zeroes biases.
void init_he(Network& net, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Forward and backward

/// Class probabilities for one input. Throws ShapeError on size mismatch.
std::vector<double> forward(const Network& net, std::span<const double> input);

/// One row per input.
std::vector<std::vector<double>> forward(const Network& net, const std::vector<std::vector<double>>& batch);

/// Mean cross-entropy over the batch (log-sum-exp on the logits).
double batch_loss(const Network& net, const std::vector<std::vector<double>>& batch,
                  std::span<const std::uint32_t> labels);

struct Gradient {
  double loss = 0;            // mean cross-entropy
  std::size_t correct = 0;    // argmax hits in this batch
  std::vector<double> grad;   // d(mean loss)/d(params)
};

/// Mean loss and its exact gradient. Examples run in parallel; per-example
/// gradients are summed in example order so the result does not depend on
/// the thread count.
Gradient loss_and_gradient(const Network& net, const std::vector<std::vector<double>>& batch,
                           std::span<const std::uint32_t> labels);

// ---------------------------------------------------------------------------
// Optimizers

enum class OptimizerKind { Sgd, Momentum, Adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

std::string_view optimizer_name(OptimizerKind k);
OptimizerKind parse_optimizer(std::string_view name);

class Optimizer {
 public:
  Optimizer(OptimizerConfig config, std::size_t param_count);
  void step(std::span<double> params, std::span<const double> grad);
  std::size_t steps() const { return t_; }

 private:
  OptimizerConfig config_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::size_t t_ = 0;
};

/// One optimizer update on the batch; returns the pre-update batch loss.
/// Throws NumericalDivergence on a non-finite loss or gradient.
double train_step(Network& net, const std::vector<std::vector<double>>& batch,
                  std::span<const std::uint32_t> labels, Optimizer& opt);

// ---------------------------------------------------------------------------
// Training on datasets

struct TrainConfig {
  int epochs = 30;
  int batch_size = 32;
  OptimizerConfig optimizer;
  int input_size = 64;
  int channels = 1;
  std::uint64_t seed = 1;
  bool shuffle_each_epoch = true;

  /// Throws BadArgument when a field is out of range.
  void validate() const;
};

/// Preprocessed samples: resized (nearest), channel-converted, scaled by 1/255.
struct LabeledSet {
  std::vector<std::vector<double>> inputs;
  std::vector<std::uint32_t> labels;
  std::vector<std::string> paths;

  std::size_t size() const { return inputs.size(); }
};

std::vector<double> to_input(const ImageTensor& img, int input_size, int channels);

LabeledSet load_split(const dataset::Manifest& manifest, const std::filesystem::path& root, dataset::Split split,
                      int input_size, int channels);

struct EpochStats {
  double train_loss = 0;
  double train_accuracy = 0;
  double val_accuracy = 0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  int best_epoch = 0;  // 1-based; first maximum of val_accuracy
  std::size_t optimizer_steps = 0;
  Network best_weights;
};

/// Trains `net` in place (final weights) and returns the report with the best
/// validation snapshot. Pure function of (net, data, config).
TrainReport train(Network& net, const LabeledSet& train_set, const LabeledSet& val_set, const TrainConfig& config);

TrainReport train(Network& net, const dataset::Manifest& manifest, const std::filesystem::path& root,
                  const TrainConfig& config);

struct Predictions {
  std::vector<std::uint32_t> labels;
  std::vector<std::vector<double>> probabilities;
};

/// Argmax per row; ties go to the lower class index.
std::uint32_t argmax(std::span<const double> probs);

Predictions predict(const Network& net, const LabeledSet& samples);

Predictions predict(const Network& net, const dataset::Manifest& manifest, const std::filesystem::path& root,
                    dataset::Split split);

// ---------------------------------------------------------------------------
// Persistence

// Weights file, little-endian:
//   "PPDLWTS\0"  u32 version  u32 layer_count  u32 in_channels in_height in_width
//   per layer: u8 kind  u32 tensor_count  { u32 ndims  u32 dims[ndims]  f64 values[] }
// Conv2d and Dense carry two tensors (weights, bias); other layers carry none.
std::vector<std::uint8_t> serialize_weights(const Network& net);
Network deserialize_weights(std::span<const std::uint8_t> bytes);
void save_weights(const std::filesystem::path& path, const Network& net);
Network load_weights(const std::filesystem::path& path);

/// JSON with the per-epoch curves and best epoch.
std::string report_to_json(const TrainReport& report, const TrainConfig& config);
/// "epoch,train_loss,train_accuracy,val_accuracy" plus one row per epoch.
std::string report_to_csv(const TrainReport& report);

}  // namespace ppdl::nn
