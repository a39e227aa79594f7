#include "qc/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "qc/canonical.hpp"
#include "qc/eval.hpp"
#include "qc/rng.hpp"

namespace qc {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

std::string to_string(NeuronKind kind) {
  switch (kind) {
    case NeuronKind::kConventional:
      return "conventional";
    case NeuronKind::kQuadratic:
      return "quadratic";
    case NeuronKind::kQuadraticStrict:
      return "quadratic-strict";
  }
  throw UsageError("to_string: unknown neuron kind");
}

NeuronKind neuron_kind_from_string(const std::string& name) {
  if (name == "conventional") return NeuronKind::kConventional;
  if (name == "quadratic") return NeuronKind::kQuadratic;
  if (name == "quadratic-strict" || name == "quadratic_strict")
    return NeuronKind::kQuadraticStrict;
  throw InvalidInputError("unknown neuron kind: " + name);
}

namespace {

AnyLayer build_layer(NeuronKind kind, int fan_in, int fan_out,
                     Activation activation, std::uint64_t seed) {
  switch (kind) {
    case NeuronKind::kConventional: {
      ConventionalLayer layer = init_conventional(fan_in, fan_out, seed);
      layer.activation = activation;
      return layer;
    }
    case NeuronKind::kQuadratic:
    case NeuronKind::kQuadraticStrict: {
      QuadraticLayer layer =
          init_quadratic(fan_in, fan_out, seed,
                         kind == NeuronKind::kQuadraticStrict);
      layer.activation = activation;
      return layer;
    }
  }
  throw UsageError("build_layer: unknown neuron kind");
}

}  // namespace

SegModel make_model(const SegModelConfig& config) {
  if (config.input_width < 1)
    throw InvalidInputError("make_model: input width must be positive");
  if (config.num_classes < 2)
    throw InvalidInputError("make_model: need at least 2 classes");
  if (config.encoder_widths.empty())
    throw InvalidInputError("make_model: encoder needs at least one layer");
  for (int w : config.encoder_widths)
    if (w < 1) throw InvalidInputError("make_model: bad encoder width");
  for (int w : config.head_widths)
    if (w < 1) throw InvalidInputError("make_model: bad head width");

  const std::size_t total_layers =
      config.encoder_widths.size() + config.head_widths.size() + 1;
  std::vector<NeuronKind> kinds;
  if (config.kinds.empty())
    kinds.assign(total_layers, NeuronKind::kConventional);
  else if (config.kinds.size() == 1)
    kinds.assign(total_layers, config.kinds[0]);
  else
    kinds = config.kinds;
  if (kinds.size() != total_layers)
    throw InvalidInputError("make_model: kinds must match layer count");

  SegModel model;
  model.canonicalize_input = config.canonicalize_input;
  model.num_classes = config.num_classes;
  model.input_width = config.input_width;

  std::size_t layer_idx = 0;
  int width = config.input_width;
  for (int out : config.encoder_widths) {
    model.encoder.push_back(build_layer(kinds[layer_idx], width, out,
                                        Activation::kReLU,
                                        mix_seed(config.seed, layer_idx)));
    width = out;
    ++layer_idx;
  }
  // Head consumes [point feature ‖ pooled global feature].
  width = 2 * config.encoder_widths.back();
  for (int out : config.head_widths) {
    model.head.push_back(build_layer(kinds[layer_idx], width, out,
                                     Activation::kReLU,
                                     mix_seed(config.seed, layer_idx)));
    width = out;
    ++layer_idx;
  }
  model.head.push_back(build_layer(kinds[layer_idx], width,
                                   config.num_classes, Activation::kIdentity,
                                   mix_seed(config.seed, layer_idx)));
  return model;
}

bool strict_first_layer(const SegModel& model) {
  if (model.encoder.empty()) return false;
  const auto* q = std::get_if<QuadraticLayer>(&model.encoder.front());
  return q != nullptr && q->strict_invariant;
}

std::size_t param_count(const SegModel& model) {
  std::size_t total = 0;
  auto count = [&](const AnyLayer& layer) {
    total += std::visit(
        Overloaded{[](const ConventionalLayer& l) { return param_count(l); },
                   [](const QuadraticLayer& l) { return param_count(l); }},
        layer);
  };
  for (const AnyLayer& layer : model.encoder) count(layer);
  for (const AnyLayer& layer : model.head) count(layer);
  return total;
}

namespace {

Eigen::MatrixXd layer_forward(const AnyLayer& layer,
                              const Eigen::MatrixXd& input, AnyCache* cache) {
  return std::visit(
      Overloaded{
          [&](const ConventionalLayer& l) {
            ConventionalCache* c = nullptr;
            if (cache) c = &cache->emplace<ConventionalCache>();
            return conventional_forward(l, input, c);
          },
          [&](const QuadraticLayer& l) {
            QuadraticCache* c = nullptr;
            if (cache) c = &cache->emplace<QuadraticCache>();
            return quadratic_forward(l, input, c);
          }},
      layer);
}

AnyGradients layer_backward(const AnyLayer& layer, const AnyCache& cache,
                            const Eigen::MatrixXd& upstream) {
  return std::visit(
      Overloaded{[&](const ConventionalLayer& l) -> AnyGradients {
                   return conventional_backward(
                       l, std::get<ConventionalCache>(cache), upstream);
                 },
                 [&](const QuadraticLayer& l) -> AnyGradients {
                   return quadratic_backward(
                       l, std::get<QuadraticCache>(cache), upstream);
                 }},
      layer);
}

const Eigen::MatrixXd& input_grad(const AnyGradients& g) {
  return std::visit(
      [](const auto& grads) -> const Eigen::MatrixXd& { return grads.input; },
      g);
}

}  // namespace

Eigen::MatrixXd forward(const SegModel& model, const PointCloud& cloud,
                        ModelCache* cache) {
  validate(cloud);
  if (cloud.size() == 0) throw InvalidInputError("forward: empty cloud");
  const Eigen::Index width = 3 + cloud.features.cols();
  if (width != model.input_width)
    throw InvalidInputError("forward: cloud width " + std::to_string(width) +
                            " does not match model input width " +
                            std::to_string(model.input_width));

  Eigen::MatrixXd input(cloud.size(), width);
  if (model.canonicalize_input)
    input.leftCols(3) = canonicalize(cloud).cloud.positions;
  else
    input.leftCols(3) = cloud.positions;
  if (cloud.features.cols() > 0)
    input.rightCols(cloud.features.cols()) = cloud.features;

  if (cache) {
    cache->input = input;
    cache->encoder.resize(model.encoder.size());
    cache->head.resize(model.head.size());
  }

  Eigen::MatrixXd f = input;
  for (std::size_t i = 0; i < model.encoder.size(); ++i)
    f = layer_forward(model.encoder[i], f, cache ? &cache->encoder[i] : nullptr);

  // Coordinate-wise max over points; ties keep the lowest row so the pick is
  // reproducible.
  const Eigen::Index n = f.rows();
  const Eigen::Index e_width = f.cols();
  Eigen::RowVectorXd global(e_width);
  std::vector<Eigen::Index> argmax(static_cast<std::size_t>(e_width), 0);
  for (Eigen::Index c = 0; c < e_width; ++c) {
    Eigen::Index best = 0;
    for (Eigen::Index r = 1; r < n; ++r)
      if (f(r, c) > f(best, c)) best = r;
    argmax[static_cast<std::size_t>(c)] = best;
    global(c) = f(best, c);
  }

  if (cache) {
    cache->encoder_out = f;
    cache->pool_argmax = argmax;
  }

  Eigen::MatrixXd h(n, 2 * e_width);
  h.leftCols(e_width) = f;
  h.rightCols(e_width) = global.replicate(n, 1);

  for (std::size_t i = 0; i < model.head.size(); ++i)
    h = layer_forward(model.head[i], h, cache ? &cache->head[i] : nullptr);

  if (cache) cache->valid = true;
  return h;
}

double cross_entropy(const Eigen::MatrixXd& logits,
                     const std::vector<int>& labels, Eigen::MatrixXd* grad) {
  const Eigen::Index n = logits.rows();
  const Eigen::Index c = logits.cols();
  if (n == 0) throw InvalidInputError("cross_entropy: no rows");
  if (static_cast<Eigen::Index>(labels.size()) != n)
    throw InvalidInputError("cross_entropy: label count mismatch");
  for (int label : labels)
    if (label < 0 || label >= c)
      throw InvalidInputError("cross_entropy: label out of range");

  if (grad) grad->resize(n, c);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = logits.row(i).maxCoeff();
    const Eigen::ArrayXd shifted = logits.row(i).transpose().array() - m;
    const double lse = m + std::log(shifted.exp().sum());
    total += lse - logits(i, labels[static_cast<std::size_t>(i)]);
    if (grad) {
      grad->row(i) =
          (logits.row(i).array() - lse).exp().matrix();
      (*grad)(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
    }
  }
  if (grad) *grad /= static_cast<double>(n);
  return total / static_cast<double>(n);
}

ModelGradients backward(const SegModel& model, const ModelCache& cache,
                        const Eigen::MatrixXd& upstream) {
  if (!cache.valid) throw UsageError("backward: run forward with a cache first");
  if (upstream.cols() != model.num_classes ||
      upstream.rows() != cache.input.rows())
    throw InvalidInputError("backward: upstream shape mismatch");

  ModelGradients grads;
  grads.encoder.resize(model.encoder.size());
  grads.head.resize(model.head.size());

  Eigen::MatrixXd d = upstream;
  for (std::size_t i = model.head.size(); i-- > 0;) {
    grads.head[i] = layer_backward(model.head[i], cache.head[i], d);
    d = input_grad(grads.head[i]);
  }

  // Split the concat: point-feature part flows straight through, the global
  // part is summed over rows and routed to each column's pooling winner.
  const Eigen::Index e_width = cache.encoder_out.cols();
  Eigen::MatrixXd d_enc = d.leftCols(e_width);
  for (Eigen::Index c = 0; c < e_width; ++c)
    d_enc(cache.pool_argmax[static_cast<std::size_t>(c)], c) +=
        d.col(e_width + c).sum();

  for (std::size_t i = model.encoder.size(); i-- > 0;) {
    grads.encoder[i] = layer_backward(model.encoder[i], cache.encoder[i], d_enc);
    d_enc = input_grad(grads.encoder[i]);
  }
  return grads;
}

std::vector<int> predict_labels(const SegModel& model,
                                const PointCloud& cloud) {
  const Eigen::MatrixXd logits = forward(model, cloud);
  std::vector<int> labels(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    int best = 0;
    for (int c = 1; c < logits.cols(); ++c)
      if (logits(i, c) > logits(i, best)) best = c;
    labels[static_cast<std::size_t>(i)] = best;
  }
  return labels;
}

namespace {

// Aligned flat spans over every parameter tensor; the ordering is the layer
// order with a fixed per-kind tensor order, shared with gradients and the
// checkpoint format.
template <typename Span, typename Layer, typename F>
void collect_spans(Layer& layer, F&& push) {
  std::visit(Overloaded{[&](auto& l) {
               using L = std::decay_t<decltype(l)>;
               if constexpr (std::is_same_v<L, ConventionalLayer> ||
                             std::is_same_v<L, ConventionalGradients>) {
                 push(l.w);
                 push(l.b);
               } else {
                 push(l.w1);
                 push(l.w2);
                 push(l.w3);
                 push(l.b1);
                 push(l.b2);
                 push(l.b3);
               }
             }},
             layer);
}

struct ParamSpan {
  double* data;
  Eigen::Index size;
};
struct ConstSpan {
  const double* data;
  Eigen::Index size;
};

std::vector<ParamSpan> param_spans(SegModel& model) {
  std::vector<ParamSpan> spans;
  auto push = [&](auto& tensor) {
    spans.push_back({tensor.data(), tensor.size()});
  };
  for (AnyLayer& layer : model.encoder)
    collect_spans<ParamSpan>(layer, push);
  for (AnyLayer& layer : model.head) collect_spans<ParamSpan>(layer, push);
  return spans;
}

std::vector<ConstSpan> grad_spans(const ModelGradients& grads) {
  std::vector<ConstSpan> spans;
  auto push = [&](const auto& tensor) {
    spans.push_back({tensor.data(), tensor.size()});
  };
  for (const AnyGradients& g : grads.encoder)
    collect_spans<ConstSpan>(g, push);
  for (const AnyGradients& g : grads.head) collect_spans<ConstSpan>(g, push);
  return spans;
}

std::vector<ParamSpan> grad_spans_mut(ModelGradients& grads) {
  std::vector<ParamSpan> spans;
  auto push = [&](auto& tensor) {
    spans.push_back({tensor.data(), tensor.size()});
  };
  for (AnyGradients& g : grads.encoder) collect_spans<ParamSpan>(g, push);
  for (AnyGradients& g : grads.head) collect_spans<ParamSpan>(g, push);
  return spans;
}

void axpy_gradients(ModelGradients& acc, const ModelGradients& g,
                    double alpha) {
  std::vector<ParamSpan> dst = grad_spans_mut(acc);
  std::vector<ConstSpan> src = grad_spans(g);
  for (std::size_t i = 0; i < dst.size(); ++i) {
    Eigen::Map<Eigen::ArrayXd> d(dst[i].data, dst[i].size);
    Eigen::Map<const Eigen::ArrayXd> s(src[i].data, src[i].size);
    d += alpha * s;
  }
}

void scale_gradients(ModelGradients& g, double alpha) {
  for (ParamSpan span : grad_spans_mut(g))
    Eigen::Map<Eigen::ArrayXd>(span.data, span.size) *= alpha;
}

struct OptimizerState {
  TrainConfig::Optimizer kind;
  double lr;
  long step = 0;
  std::vector<Eigen::ArrayXd> m, v;

  void apply(SegModel& model, const ModelGradients& grads) {
    std::vector<ParamSpan> params = param_spans(model);
    std::vector<ConstSpan> gspans = grad_spans(grads);
    if (kind == TrainConfig::Optimizer::kSGD) {
      for (std::size_t i = 0; i < params.size(); ++i)
        Eigen::Map<Eigen::ArrayXd>(params[i].data, params[i].size) -=
            lr * Eigen::Map<const Eigen::ArrayXd>(gspans[i].data,
                                                  gspans[i].size);
      return;
    }
    constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
    if (m.empty()) {
      m.resize(params.size());
      v.resize(params.size());
      for (std::size_t i = 0; i < params.size(); ++i) {
        m[i] = Eigen::ArrayXd::Zero(params[i].size);
        v[i] = Eigen::ArrayXd::Zero(params[i].size);
      }
    }
    ++step;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
    for (std::size_t i = 0; i < params.size(); ++i) {
      Eigen::Map<const Eigen::ArrayXd> g(gspans[i].data, gspans[i].size);
      m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g;
      v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g.square();
      Eigen::Map<Eigen::ArrayXd>(params[i].data, params[i].size) -=
          lr * (m[i] / c1) / ((v[i] / c2).sqrt() + kEps);
    }
  }
};

}  // namespace

std::vector<EpochStats> train(SegModel& model,
                              const std::vector<PointCloud>& dataset,
                              const TrainConfig& cfg) {
  if (dataset.empty()) throw InvalidInputError("train: empty dataset");
  if (cfg.epochs < 1 || cfg.batch_size < 1 || !(cfg.learning_rate > 0.0) ||
      cfg.points_per_sample < 1)
    throw InvalidInputError("train: hyperparameters must be positive");
  for (const PointCloud& cloud : dataset)
    if (!cloud.has_labels())
      throw InvalidInputError("train: dataset clouds need labels");

  std::vector<PointCloud> working;
  working.reserve(dataset.size());
  for (const PointCloud& cloud : dataset)
    working.push_back(cloud.size() == cfg.points_per_sample
                          ? cloud
                          : grid_sample(cloud, cfg.points_per_sample));

  OptimizerState opt;
  opt.kind = cfg.optimizer;
  opt.lr = cfg.learning_rate;
  Rng shuffle_rng(mix_seed(cfg.seed, 0x9e3779b97f4a7c15ULL));
  const std::size_t n = working.size();
  std::vector<std::size_t> order(n);
  std::vector<EpochStats> history;
  history.reserve(static_cast<std::size_t>(cfg.epochs));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = n; i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.integer(i)]);

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n;
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop =
          std::min(n, start + static_cast<std::size_t>(cfg.batch_size));
      ModelGradients acc;
      bool first = true;
      for (std::size_t pos = start; pos < stop; ++pos) {
        const std::size_t idx = order[pos];
        const std::uint64_t stream =
            mix_seed(cfg.seed, 1 + static_cast<std::uint64_t>(epoch) * n + idx);
        PointCloud sample = working[idx];
        if (cfg.augment_scale || cfg.augment_jitter) {
          AugmentParams params = cfg.augment_params;
          if (!cfg.augment_scale)
            params.scale_min = params.scale_max = 1.0;
          if (!cfg.augment_jitter) params.jitter_sigma = 0.0;
          sample = augment(sample, params, mix_seed(stream, 1));
        }
        if (cfg.augment_reflect) {
          Rng coin(mix_seed(stream, 2));
          if (coin.uniform() < 0.5) sample = reflect(sample, coin.unit_vector());
        }

        // Blown-up parameters surface either as a non-finite loss or as a
        // non-finite activation thrown mid-forward; both mean divergence.
        ModelCache cache;
        ModelGradients g;
        try {
          const Eigen::MatrixXd logits = forward(model, sample, &cache);
          Eigen::MatrixXd dlogits;
          const double loss = cross_entropy(logits, sample.labels, &dlogits);
          if (!std::isfinite(loss))
            throw TrainingError("train: non-finite loss", epoch);
          epoch_loss += loss;
          g = backward(model, cache, dlogits);
        } catch (const NumericalError&) {
          throw TrainingError("train: non-finite loss", epoch);
        }
        if (first) {
          acc = std::move(g);
          first = false;
        } else {
          axpy_gradients(acc, g, 1.0);
        }
      }
      scale_gradients(acc, 1.0 / static_cast<double>(stop - start));
      opt.apply(model, acc);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.loss = epoch_loss / static_cast<double>(n);
    ConfusionMatrix cm = ConfusionMatrix::zero(model.num_classes);
    for (const PointCloud& cloud : working)
      cm.add(confusion(predict_labels(model, cloud), cloud.labels,
                       model.num_classes));
    stats.macc = macc(cm);
    stats.miou = miou(cm);
    history.push_back(stats);
  }
  return history;
}

namespace {

void write_matrix(std::ostream& out, const std::string& name,
                  const Eigen::MatrixXd& m) {
  out << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  char buf[64];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      out << (j ? " " : "") << buf;
    }
    out << '\n';
  }
}

void write_vector(std::ostream& out, const std::string& name,
                  const Eigen::VectorXd& v) {
  write_matrix(out, name, v);
}

Eigen::MatrixXd read_matrix(std::istream& in, const std::string& expect) {
  std::string name;
  Eigen::Index rows = 0, cols = 0;
  if (!(in >> name >> rows >> cols) || name != expect || rows < 0 || cols < 0)
    throw InvalidInputError("load_model: expected tensor " + expect);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      if (!(in >> m(i, j)))
        throw InvalidInputError("load_model: truncated tensor " + expect);
  return m;
}

Eigen::VectorXd read_vector(std::istream& in, const std::string& expect) {
  const Eigen::MatrixXd m = read_matrix(in, expect);
  if (m.cols() != 1)
    throw InvalidInputError("load_model: tensor " + expect +
                            " is not a column");
  return m.col(0);
}

void write_layer(std::ostream& out, const AnyLayer& layer) {
  std::visit(
      Overloaded{
          [&](const ConventionalLayer& l) {
            out << "layer conventional "
                << (l.activation == Activation::kReLU ? "relu" : "identity")
                << '\n';
            write_matrix(out, "w", l.w);
            write_vector(out, "b", l.b);
          },
          [&](const QuadraticLayer& l) {
            out << "layer "
                << (l.strict_invariant ? "quadratic-strict" : "quadratic")
                << ' '
                << (l.activation == Activation::kReLU ? "relu" : "identity")
                << '\n';
            write_matrix(out, "w1", l.w1);
            write_matrix(out, "w2", l.w2);
            write_matrix(out, "w3", l.w3);
            write_vector(out, "b1", l.b1);
            write_vector(out, "b2", l.b2);
            write_vector(out, "b3", l.b3);
          }},
      layer);
}

AnyLayer read_layer(std::istream& in) {
  std::string tag, kind, activation;
  if (!(in >> tag >> kind >> activation) || tag != "layer")
    throw InvalidInputError("load_model: expected layer header");
  Activation act;
  if (activation == "relu")
    act = Activation::kReLU;
  else if (activation == "identity")
    act = Activation::kIdentity;
  else
    throw InvalidInputError("load_model: unknown activation " + activation);

  if (kind == "conventional") {
    ConventionalLayer l;
    l.activation = act;
    l.w = read_matrix(in, "w");
    l.b = read_vector(in, "b");
    return l;
  }
  if (kind == "quadratic" || kind == "quadratic-strict") {
    QuadraticLayer l;
    l.activation = act;
    l.strict_invariant = kind == "quadratic-strict";
    l.w1 = read_matrix(in, "w1");
    l.w2 = read_matrix(in, "w2");
    l.w3 = read_matrix(in, "w3");
    l.b1 = read_vector(in, "b1");
    l.b2 = read_vector(in, "b2");
    l.b3 = read_vector(in, "b3");
    return l;
  }
  throw InvalidInputError("load_model: unknown layer kind " + kind);
}

constexpr const char* kModelMagic = "qc-seg-model";
constexpr int kModelVersion = 1;

}  // namespace

void save_model(const SegModel& model, std::ostream& out) {
  out << kModelMagic << ' ' << kModelVersion << '\n';
  out << "canonicalize " << (model.canonicalize_input ? 1 : 0) << '\n';
  out << "num_classes " << model.num_classes << '\n';
  out << "input_width " << model.input_width << '\n';
  out << "encoder " << model.encoder.size() << '\n';
  out << "head " << model.head.size() << '\n';
  for (const AnyLayer& layer : model.encoder) write_layer(out, layer);
  for (const AnyLayer& layer : model.head) write_layer(out, layer);
}

void save_model(const SegModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInputError("save_model: cannot open " + path);
  save_model(model, out);
  if (!out) throw InvalidInputError("save_model: write failed for " + path);
}

SegModel load_model(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != kModelMagic)
    throw InvalidInputError("load_model: not a model file");
  if (version != kModelVersion)
    throw InvalidInputError("load_model: unsupported version " +
                            std::to_string(version));

  auto read_field = [&](const std::string& expect) {
    std::string key;
    long value = 0;
    if (!(in >> key >> value) || key != expect)
      throw InvalidInputError("load_model: expected field " + expect);
    return value;
  };
  SegModel model;
  model.canonicalize_input = read_field("canonicalize") != 0;
  model.num_classes = static_cast<int>(read_field("num_classes"));
  model.input_width = static_cast<int>(read_field("input_width"));
  const long n_encoder = read_field("encoder");
  const long n_head = read_field("head");
  if (model.num_classes < 2 || model.input_width < 1 || n_encoder < 1 ||
      n_head < 1)
    throw InvalidInputError("load_model: malformed header");

  for (long i = 0; i < n_encoder; ++i)
    model.encoder.push_back(read_layer(in));
  for (long i = 0; i < n_head; ++i) model.head.push_back(read_layer(in));
  return model;
}

SegModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInputError("load_model: cannot open " + path);
  return load_model(in);
}

}  // namespace qc
