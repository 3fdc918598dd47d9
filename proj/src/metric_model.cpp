#include "signmap/metric_model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace signmap {

namespace {

using feature_layout::kBlockA;
using feature_layout::kBlockB;
using feature_layout::kEmbeddingOffset;

constexpr std::size_t kSlotA = kBlockA + kEmbeddingOffset;
constexpr std::size_t kSlotB = kBlockB + kEmbeddingOffset;

bool in_embedding_slot(std::size_t i) {
  return (i >= kSlotA && i < kSlotA + kEmbeddingDim) || (i >= kSlotB && i < kSlotB + kEmbeddingDim);
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// -[y log s(z) + (1-y) log(1-s(z))]
double bce_with_logit(double z, double y) {
  return std::max(z, 0.0) - y * z + std::log1p(std::exp(-std::abs(z)));
}

struct SparseInput {
  std::vector<std::uint32_t> index;
  std::vector<double> value;
};

SparseInput full_input(const MetricModel& model, const TrainingExample& x) {
  SparseInput in;
  in.index.reserve(x.index.size() + 2 * kEmbeddingDim);
  in.value.reserve(x.index.size() + 2 * kEmbeddingDim);
  in.index = x.index;
  in.value = x.value;
  const auto ea = model.embedding.row(x.class_a);
  const auto eb = model.embedding.row(x.class_b);
  for (int k = 0; k < kEmbeddingDim; ++k) {
    in.index.push_back(static_cast<std::uint32_t>(kSlotA + k));
    in.value.push_back(ea[k]);
  }
  for (int k = 0; k < kEmbeddingDim; ++k) {
    in.index.push_back(static_cast<std::uint32_t>(kSlotB + k));
    in.value.push_back(eb[k]);
  }
  return in;
}

struct SampleTrace {
  SparseInput input;
  std::vector<std::vector<double>> act;    // post-activation output of each layer
  std::vector<std::vector<double>> delta;  // dL/dz of each layer
  double logit = 0.0;
  double loss = 0.0;
};

void check_example(const MetricModel& model, const TrainingExample& x) {
  if (!model.well_formed()) throw std::invalid_argument("metric model is malformed");
  if (x.index.size() != x.value.size()) throw std::invalid_argument("ragged training example");
  for (auto i : x.index) {
    if (i >= model.input_width()) {
      throw std::invalid_argument("feature index " + std::to_string(i) +
                                  " outside model input width " +
                                  std::to_string(model.input_width()));
    }
  }
}

void forward(const MetricModel& model, const TrainingExample& x, SampleTrace& t) {
  t.input = full_input(model, x);
  const std::size_t n_layers = model.layers.size();
  t.act.resize(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l) {
    const DenseLayer& layer = model.layers[l];
    auto& out = t.act[l];
    out.assign(layer.outputs, 0.0);
    for (std::size_t o = 0; o < layer.outputs; ++o) {
      double z = layer.bias[o];
      const double* row = layer.weights.data() + o * layer.inputs;
      if (l == 0) {
        for (std::size_t k = 0; k < t.input.index.size(); ++k) z += row[t.input.index[k]] * t.input.value[k];
      } else {
        const auto& prev = t.act[l - 1];
        for (std::size_t i = 0; i < layer.inputs; ++i) z += row[i] * prev[i];
      }
      if (l + 1 == n_layers) {
        t.logit = z;
        out[o] = sigmoid(z);
      } else {
        out[o] = std::tanh(z);
      }
    }
  }
}

void backward(const MetricModel& model, double label, double scale, SampleTrace& t) {
  const std::size_t n_layers = model.layers.size();
  t.delta.resize(n_layers);
  t.loss = bce_with_logit(t.logit, label);
  t.delta[n_layers - 1] = {(t.act[n_layers - 1][0] - label) * scale};
  for (std::size_t l = n_layers - 1; l-- > 0;) {
    const DenseLayer& next = model.layers[l + 1];
    auto& d = t.delta[l];
    d.assign(next.inputs, 0.0);
    for (std::size_t o = 0; o < next.outputs; ++o) {
      const double g = t.delta[l + 1][o];
      const double* row = next.weights.data() + o * next.inputs;
      for (std::size_t i = 0; i < next.inputs; ++i) d[i] += row[i] * g;
    }
    for (std::size_t i = 0; i < d.size(); ++i) d[i] *= 1.0 - t.act[l][i] * t.act[l][i];
  }
}

std::vector<std::span<double>> parameters(MetricModel& m) {
  std::vector<std::span<double>> p;
  for (auto& layer : m.layers) {
    p.emplace_back(layer.weights);
    p.emplace_back(layer.bias);
  }
  p.emplace_back(m.embedding.table());
  return p;
}

}  // namespace

bool MetricModel::well_formed() const {
  if (layers.empty() || layers.back().outputs != 1) return false;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    if (layer.weights.size() != layer.inputs * layer.outputs || layer.bias.size() != layer.outputs) {
      return false;
    }
    if (l > 0 && layers[l - 1].outputs != layer.inputs) return false;
  }
  return layers.front().inputs >= feature_layout::kSnapshotA;
}

MetricModel make_metric_model(std::size_t input_width, const std::vector<int>& hidden,
                              ClassEmbedding embedding, Rng& rng) {
  MetricModel m;
  m.embedding = std::move(embedding);
  std::size_t in = input_width;
  std::vector<std::size_t> widths;
  for (int h : hidden) {
    if (h <= 0) throw std::invalid_argument("hidden layer widths must be positive");
    widths.push_back(static_cast<std::size_t>(h));
  }
  widths.push_back(1);
  for (std::size_t out : widths) {
    DenseLayer layer{in, out, std::vector<double>(in * out), std::vector<double>(out, 0.0)};
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (double& w : layer.weights) w = u(rng);
    m.layers.push_back(std::move(layer));
    in = out;
  }
  return m;
}

MetricModel zeros_like(const MetricModel& m) {
  MetricModel z = m;
  for (auto p : parameters(z)) std::fill(p.begin(), p.end(), 0.0);
  return z;
}

TrainingExample make_example(const PairFeatures& f, double label) {
  TrainingExample x;
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    if (f.values[i] != 0.0 && !in_embedding_slot(i)) {
      x.index.push_back(static_cast<std::uint32_t>(i));
      x.value.push_back(f.values[i]);
    }
  }
  x.class_a = f.class_a;
  x.class_b = f.class_b;
  x.label = label;
  return x;
}

TrainingExample make_example(const LabeledPair& p) {
  const int classes = std::max(p.a.class_id, p.b.class_id) + 1;
  const ClassEmbedding placeholder(
      classes, std::vector<double>(static_cast<std::size_t>(classes) * kEmbeddingDim, 0.0));
  return make_example(build_pair_features(p.a, p.b, *p.grid_a, *p.grid_b, p.image, placeholder),
                      static_cast<double>(p.label));
}

std::vector<TrainingExample> make_examples(const std::vector<LabeledPair>& pairs) {
  std::vector<TrainingExample> out(pairs.size());
  const long n = static_cast<long>(pairs.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) out[i] = make_example(pairs[i]);
  return out;
}

double model_score(const MetricModel& model, const TrainingExample& x) {
  check_example(model, x);
  SampleTrace t;
  forward(model, x, t);
  return t.act.back()[0];
}

double model_score(const MetricModel& model, const PairFeatures& f) {
  if (f.values.size() != model.input_width()) {
    throw std::invalid_argument("feature length " + std::to_string(f.values.size()) +
                                " does not match model input width " +
                                std::to_string(model.input_width()));
  }
  return model_score(model, make_example(f, 0.0));
}

double loss_and_gradient(const MetricModel& model, std::span<const TrainingExample> batch,
                         MetricModel& grad, Exec exec) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  for (const auto& x : batch) check_example(model, x);
  grad = zeros_like(model);

  const long n = static_cast<long>(batch.size());
  const double scale = 1.0 / static_cast<double>(n);
  std::vector<SampleTrace> traces(batch.size());

  // Per-sample forward/backward: independent writes.
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (long s = 0; s < n; ++s) {
    forward(model, batch[s], traces[s]);
    backward(model, batch[s].label, scale, traces[s]);
  }

  // Weight gradients: one output row per iteration, samples summed in
  // order, so the result does not depend on the thread count.
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    DenseLayer& g = grad.layers[l];
    const long rows = static_cast<long>(g.outputs);
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
    for (long o = 0; o < rows; ++o) {
      double* grow = g.weights.data() + o * g.inputs;
      double gb = 0.0;
      for (long s = 0; s < n; ++s) {
        const SampleTrace& t = traces[s];
        const double d = t.delta[l][o];
        gb += d;
        if (l == 0) {
          for (std::size_t k = 0; k < t.input.index.size(); ++k) grow[t.input.index[k]] += d * t.input.value[k];
        } else {
          const auto& prev = t.act[l - 1];
          for (std::size_t i = 0; i < g.inputs; ++i) grow[i] += d * prev[i];
        }
      }
      g.bias[o] = gb;
    }
  }

  // Embedding rows: input gradient at the embedding slots.
  const DenseLayer& first = model.layers.front();
  double loss = 0.0;
  for (long s = 0; s < n; ++s) {
    const SampleTrace& t = traces[s];
    loss += t.loss;
    auto ga = grad.embedding.row(batch[s].class_a);
    auto gb = grad.embedding.row(batch[s].class_b);
    for (int k = 0; k < kEmbeddingDim; ++k) {
      double sa = 0.0;
      double sb = 0.0;
      for (std::size_t o = 0; o < first.outputs; ++o) {
        sa += first.w(o, kSlotA + k) * t.delta[0][o];
        sb += first.w(o, kSlotB + k) * t.delta[0][o];
      }
      ga[k] += sa;
      gb[k] += sb;
    }
  }
  return loss * scale;
}

double mean_loss(const MetricModel& model, std::span<const TrainingExample> batch, Exec exec) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  for (const auto& x : batch) check_example(model, x);
  const long n = static_cast<long>(batch.size());
  std::vector<double> losses(batch.size());
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (long s = 0; s < n; ++s) {
    SampleTrace t;
    forward(model, batch[s], t);
    losses[s] = bce_with_logit(t.logit, batch[s].label);
  }
  return std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(n);
}

TrainResult train_similarity_model(const PairSplit& split, const TrainConfig& config, Rng& rng) {
  const std::size_t total = split.train.size() + split.validation.size() + split.test.size();
  if (total == 0) throw std::invalid_argument("no training pairs");
  if (total < 100) {
    throw std::invalid_argument("need at least 100 pairs to train, got " + std::to_string(total));
  }
  return train_similarity_model(make_examples(split.train), make_examples(split.validation), config,
                                rng);
}

TrainResult train_similarity_model(const std::vector<TrainingExample>& train,
                                   const std::vector<TrainingExample>& validation,
                                   const TrainConfig& config, Rng& rng) {
  if (train.empty()) throw std::invalid_argument("no training pairs");
  if (config.batch_size == 0 || config.epochs <= 0) {
    throw std::invalid_argument("batch size and epochs must be positive");
  }
  int classes = config.num_classes;
  for (const auto& x : train) classes = std::max({classes, x.class_a + 1, x.class_b + 1});
  for (const auto& x : validation) classes = std::max({classes, x.class_a + 1, x.class_b + 1});

  MetricModel model = make_metric_model(feature_layout::kTotal, config.hidden,
                                        ClassEmbedding::seeded(classes, config.embedding_seed), rng);
  const auto& held_out = validation.empty() ? train : validation;

  TrainResult result;
  result.initial_train_loss = mean_loss(model, train, config.exec);
  result.model = model;
  double best = mean_loss(model, held_out, config.exec);

  MetricModel grad = zeros_like(model);
  MetricModel m1 = zeros_like(model);
  MetricModel m2 = zeros_like(model);
  long step = 0;

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<TrainingExample> batch;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(train[order[i]]);
      const double loss = loss_and_gradient(model, batch, grad, config.exec);
      if (!std::isfinite(loss)) {
        throw std::runtime_error("training diverged at epoch " + std::to_string(epoch));
      }
      epoch_loss += loss * static_cast<double>(end - start);

      ++step;
      const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
      auto p = parameters(model);
      auto g = parameters(grad);
      auto a = parameters(m1);
      auto b = parameters(m2);
      for (std::size_t k = 0; k < p.size(); ++k) {
        const long len = static_cast<long>(p[k].size());
        double* pk = p[k].data();
        const double* gk = g[k].data();
        double* ak = a[k].data();
        double* bk = b[k].data();
#pragma omp parallel for schedule(static) if (config.exec == Exec::parallel && len > 4096)
        for (long i = 0; i < len; ++i) {
          ak[i] = config.beta1 * ak[i] + (1.0 - config.beta1) * gk[i];
          bk[i] = config.beta2 * bk[i] + (1.0 - config.beta2) * gk[i] * gk[i];
          pk[i] -= config.learning_rate * (ak[i] / c1) / (std::sqrt(bk[i] / c2) + config.epsilon);
        }
      }
    }
    const double val = mean_loss(model, held_out, config.exec);
    if (!std::isfinite(val)) {
      throw std::runtime_error("validation loss diverged at epoch " + std::to_string(epoch));
    }
    result.history.push_back({epoch, epoch_loss / static_cast<double>(train.size()), val});
    if (val < best) {
      best = val;
      result.model = model;
      result.best_epoch = epoch;
    }
  }
  return result;
}

double accuracy(const MetricModel& model, std::span<const TrainingExample> examples,
                double threshold) {
  if (examples.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& x : examples) {
    const int predicted = model_score(model, x) >= threshold ? 1 : 0;
    if (predicted == static_cast<int>(std::lround(x.label))) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

std::vector<std::pair<double, double>> error_percentiles(const MetricModel& model,
                                                         std::span<const TrainingExample> examples,
                                                         const std::vector<double>& percentiles) {
  std::vector<double> errors;
  errors.reserve(examples.size());
  for (const auto& x : examples) errors.push_back(std::abs(model_score(model, x) - x.label));
  std::sort(errors.begin(), errors.end());
  std::vector<std::pair<double, double>> out;
  for (double q : percentiles) {
    if (errors.empty()) {
      out.emplace_back(q, 0.0);
      continue;
    }
    const double n = static_cast<double>(errors.size());
    std::size_t rank = static_cast<std::size_t>(std::ceil(std::clamp(q, 0.0, 100.0) / 100.0 * n));
    rank = std::clamp<std::size_t>(rank, 1, errors.size());
    out.emplace_back(q, errors[rank - 1]);
  }
  return out;
}

// --- serialization ----------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'S', 'I', 'G', 'N', 'M', 'A', 'P', 'M'};

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    std::reverse(b, b + sizeof(T));
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

void put_u32(std::ostream& out, std::uint32_t v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_doubles(std::ostream& out, const std::vector<double>& v) {
  for (double d : v) {
    std::uint64_t bits = to_little(std::bit_cast<std::uint64_t>(d));
    out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
  }
}

std::uint32_t get_u32(std::istream& in) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw std::runtime_error("model file truncated");
  }
  return to_little(v);
}

std::vector<double> get_doubles(std::istream& in, std::size_t n) {
  std::vector<double> v(n);
  for (double& d : v) {
    std::uint64_t bits = 0;
    if (!in.read(reinterpret_cast<char*>(&bits), sizeof bits)) {
      throw std::runtime_error("model file truncated");
    }
    d = std::bit_cast<double>(to_little(bits));
  }
  return v;
}

}  // namespace

void save_model(const MetricModel& model, std::ostream& out) {
  out.write(kMagic, sizeof kMagic);
  put_u32(out, kModelFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(model.embedding.num_classes()));
  put_u32(out, kEmbeddingDim);
  put_doubles(out, model.embedding.table());
  put_u32(out, static_cast<std::uint32_t>(model.layers.size()));
  for (const auto& layer : model.layers) {
    put_u32(out, static_cast<std::uint32_t>(layer.outputs));
    put_u32(out, static_cast<std::uint32_t>(layer.inputs));
    put_doubles(out, layer.weights);
    put_doubles(out, layer.bias);
  }
  if (!out) throw std::runtime_error("failed writing model");
}

MetricModel load_model(std::istream& in) {
  char magic[8] = {};
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw std::runtime_error("not a metric model file (bad magic)");
  }
  const auto version = get_u32(in);
  if (version != kModelFormatVersion) {
    throw std::runtime_error("unsupported model format version " + std::to_string(version));
  }
  const auto classes = get_u32(in);
  const auto dim = get_u32(in);
  if (dim != kEmbeddingDim) throw std::runtime_error("unexpected embedding width");
  MetricModel m;
  m.embedding = ClassEmbedding(static_cast<int>(classes),
                               get_doubles(in, static_cast<std::size_t>(classes) * dim));
  const auto n_layers = get_u32(in);
  for (std::uint32_t l = 0; l < n_layers; ++l) {
    DenseLayer layer;
    layer.outputs = get_u32(in);
    layer.inputs = get_u32(in);
    layer.weights = get_doubles(in, layer.outputs * layer.inputs);
    layer.bias = get_doubles(in, layer.outputs);
    m.layers.push_back(std::move(layer));
  }
  if (!m.well_formed()) throw std::runtime_error("model layer shapes do not chain");
  return m;
}

void save_model(const MetricModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  save_model(model, out);
}

MetricModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return load_model(in);
}

double ModelScorer::score(const Detection& a, const SnapshotGrid& grid_a, const Detection& b,
                          const SnapshotGrid& grid_b, const ImageSize& image) const {
  return model_score(model_, build_pair_features(a, b, grid_a, grid_b, image, model_.embedding));
}

}  // namespace signmap
