#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "qc/cloud.hpp"
#include "qc/data.hpp"
#include "qc/errors.hpp"
#include "qc/neurons.hpp"

namespace qc {

// Per-layer neuron choice. Strict layers drop the linear factors so their
// response depends on squared inputs only.
enum class NeuronKind { kConventional, kQuadratic, kQuadraticStrict };

std::string to_string(NeuronKind kind);
NeuronKind neuron_kind_from_string(const std::string& name);

using AnyLayer = std::variant<ConventionalLayer, QuadraticLayer>;
using AnyCache = std::variant<ConventionalCache, QuadraticCache>;
using AnyGradients = std::variant<ConventionalGradients, QuadraticGradients>;

// Shared per-point encoder, coordinate-wise max pool, then a per-point head
// over [point feature ‖ pooled global feature]. The head's last layer has an
// identity activation and emits class logits.
struct SegModel {
  std::vector<AnyLayer> encoder;
  std::vector<AnyLayer> head;
  bool canonicalize_input = false;
  int num_classes = 0;
  int input_width = 3;
};

struct SegModelConfig {
  int input_width = 3;
  std::vector<int> encoder_widths{32, 64, 128};
  std::vector<int> head_widths{64};
  int num_classes = 5;
  // One entry per layer (encoder, head, output), a single broadcast entry,
  // or empty for all-conventional.
  std::vector<NeuronKind> kinds;
  bool canonicalize_input = false;
  std::uint64_t seed = 1;
};

SegModel make_model(const SegModelConfig& config);

// True when the first encoder layer is quadratic with the strict flag; with
// canonicalize_input this is the configuration whose predictions survive any
// reflection.
bool strict_first_layer(const SegModel& model);

std::size_t param_count(const SegModel& model);

struct ModelCache {
  Eigen::MatrixXd input;  // after canonicalization, N x input_width
  std::vector<AnyCache> encoder;
  std::vector<AnyCache> head;
  std::vector<Eigen::Index> pool_argmax;  // winning row per pooled column
  Eigen::MatrixXd encoder_out;
  bool valid = false;
};

struct ModelGradients {
  std::vector<AnyGradients> encoder;
  std::vector<AnyGradients> head;
};

// Per-point class logits, N x num_classes. Canonicalizes first when the
// model asks for it.
Eigen::MatrixXd forward(const SegModel& model, const PointCloud& cloud,
                        ModelCache* cache = nullptr);

// Mean per-point softmax cross-entropy with log-sum-exp stabilization.
// Returns the loss and writes d(loss)/d(logits) when grad is non-null.
double cross_entropy(const Eigen::MatrixXd& logits,
                     const std::vector<int>& labels,
                     Eigen::MatrixXd* grad = nullptr);

ModelGradients backward(const SegModel& model, const ModelCache& cache,
                        const Eigen::MatrixXd& upstream);

std::vector<int> predict_labels(const SegModel& model,
                                const PointCloud& cloud);

struct TrainConfig {
  int epochs = 30;
  int batch_size = 4;
  double learning_rate = 1e-3;
  enum class Optimizer { kSGD, kAdam } optimizer = Optimizer::kAdam;
  std::uint64_t seed = 1;
  bool augment_scale = true;
  bool augment_jitter = true;
  bool augment_reflect = false;  // random-plane reflection, half the samples
  AugmentParams augment_params;
  int points_per_sample = 512;
};

struct EpochStats {
  int epoch = 0;
  double loss = 0.0;
  double macc = 0.0;
  double miou = 0.0;
};

// Updates the model in place; deterministic per cfg.seed. Throws
// TrainingError when the loss stops being finite.
std::vector<EpochStats> train(SegModel& model,
                              const std::vector<PointCloud>& dataset,
                              const TrainConfig& cfg);

// Versioned plain-text container of named parameter tensors; round-trips
// values exactly.
void save_model(const SegModel& model, std::ostream& out);
void save_model(const SegModel& model, const std::string& path);
SegModel load_model(std::istream& in);
SegModel load_model(const std::string& path);

}  // namespace qc
