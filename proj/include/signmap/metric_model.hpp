#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "signmap/exec.hpp"
#include "signmap/similarity.hpp"

namespace signmap {

struct DenseLayer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<double> weights;  // outputs x inputs, row-major
  std::vector<double> bias;

  double& w(std::size_t o, std::size_t i) { return weights[o * inputs + i]; }
  double w(std::size_t o, std::size_t i) const { return weights[o * inputs + i]; }
};

// Feed-forward similarity network: tanh hidden layers and one sigmoid output.
// The class embedding lives in the model; its rows replace the embedding
// slots of every input vector.
struct MetricModel {
  ClassEmbedding embedding;
  std::vector<DenseLayer> layers;

  std::size_t input_width() const { return layers.empty() ? 0 : layers.front().inputs; }
  /// Layer shapes chain and end in one output.
  bool well_formed() const;
};

inline const std::vector<int> kDefaultHiddenLayers{64, 32};

/// Glorot-uniform weights, zero biases.
MetricModel make_metric_model(std::size_t input_width, const std::vector<int>& hidden,
                              ClassEmbedding embedding, Rng& rng);

/// Same shapes, every parameter zero.
MetricModel zeros_like(const MetricModel& m);

/// Sparse input vector without the embedding slots, plus the class ids that
/// fill them and the target label.
struct TrainingExample {
  std::vector<std::uint32_t> index;
  std::vector<double> value;
  ClassId class_a = 0;
  ClassId class_b = 0;
  double label = 0.0;
};

TrainingExample make_example(const PairFeatures& f, double label);
/// Builds the features with a placeholder embedding; the model supplies its own.
TrainingExample make_example(const LabeledPair& p);
std::vector<TrainingExample> make_examples(const std::vector<LabeledPair>& pairs);

/// Forward pass. Throws std::invalid_argument on a width mismatch or an
/// unknown class.
double model_score(const MetricModel& model, const PairFeatures& f);
double model_score(const MetricModel& model, const TrainingExample& x);

/// Mean binary cross entropy over the batch; `grad` (shaped like the model)
/// receives the gradient of that mean.
double loss_and_gradient(const MetricModel& model, std::span<const TrainingExample> batch,
                         MetricModel& grad, Exec exec = Exec::parallel);
double mean_loss(const MetricModel& model, std::span<const TrainingExample> batch,
                 Exec exec = Exec::parallel);

struct TrainConfig {
  int epochs = 20;
  double learning_rate = 0.01;
  std::size_t batch_size = 32;
  std::vector<int> hidden = kDefaultHiddenLayers;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int num_classes = 50;
  std::uint64_t embedding_seed = 0x5eed;
  Exec exec = Exec::parallel;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double validation_loss = 0.0;
};

struct TrainResult {
  MetricModel model;  // best validation loss
  std::vector<EpochStats> history;
  int best_epoch = 0;
  double initial_train_loss = 0.0;
};

/// Adam on minibatches of the train split; needs at least 100 pairs overall.
TrainResult train_similarity_model(const PairSplit& split, const TrainConfig& config, Rng& rng);
TrainResult train_similarity_model(const std::vector<TrainingExample>& train,
                                   const std::vector<TrainingExample>& validation,
                                   const TrainConfig& config, Rng& rng);

double accuracy(const MetricModel& model, std::span<const TrainingExample> examples,
                double threshold = 0.5);

/// Nearest-rank percentiles of |score - label|: (percentile, max error).
std::vector<std::pair<double, double>> error_percentiles(
    const MetricModel& model, std::span<const TrainingExample> examples,
    const std::vector<double>& percentiles = {50, 75, 90, 95, 99, 100});

// Binary format: "SIGNMAPM", u32 version, u32 classes, u32 embedding dim,
// embedding table, u32 layer count, then per layer u32 outputs, u32 inputs,
// weights (row-major) and bias. Integers and doubles little-endian.
inline constexpr std::uint32_t kModelFormatVersion = 1;

void save_model(const MetricModel& model, std::ostream& out);
MetricModel load_model(std::istream& in);
void save_model(const MetricModel& model, const std::string& path);
MetricModel load_model(const std::string& path);

class ModelScorer final : public PairScorer {
 public:
  explicit ModelScorer(MetricModel model) : model_(std::move(model)) {}
  double score(const Detection& a, const SnapshotGrid& grid_a, const Detection& b,
               const SnapshotGrid& grid_b, const ImageSize& image) const override;
  const MetricModel& model() const { return model_; }

 private:
  MetricModel model_;
};

}  // namespace signmap
