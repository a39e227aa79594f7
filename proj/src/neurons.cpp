#include "qc/neurons.hpp"

#include <cmath>
#include <functional>
#include <vector>

#include "qc/rng.hpp"

namespace qc {

namespace {

Eigen::MatrixXd activate(const Eigen::MatrixXd& z, Activation act) {
  if (act == Activation::kReLU) return z.cwiseMax(0.0);
  return z;
}

// Derivative w.r.t. pre-activation; ReLU uses the z > 0 subgradient.
Eigen::MatrixXd activate_grad(const Eigen::MatrixXd& z, Activation act) {
  if (act == Activation::kReLU)
    return (z.array() > 0.0).cast<double>().matrix();
  return Eigen::MatrixXd::Ones(z.rows(), z.cols());
}

void check_input(const Eigen::MatrixXd& input, Eigen::Index fan_in,
                 const char* who) {
  if (input.cols() != fan_in)
    throw InvalidInputError(std::string(who) + ": input width mismatch");
  if (!input.allFinite())
    throw NumericalError(std::string(who) + ": non-finite input");
}

}  // namespace

Eigen::MatrixXd quadratic_forward(const QuadraticLayer& layer,
                                  const Eigen::MatrixXd& input,
                                  QuadraticCache* cache) {
  check_input(input, layer.fan_in(), "quadratic_forward");
  Eigen::MatrixXd lhs = (input * layer.w1).rowwise() + layer.b1.transpose();
  Eigen::MatrixXd rhs = (input * layer.w2).rowwise() + layer.b2.transpose();
  Eigen::MatrixXd preact =
      lhs.cwiseProduct(rhs) +
      ((input.cwiseProduct(input) * layer.w3).rowwise() +
       layer.b3.transpose());
  if (cache) {
    cache->input = input;
    cache->lhs = lhs;
    cache->rhs = rhs;
    cache->preact = preact;
    cache->valid = true;
  }
  return activate(preact, layer.activation);
}

Eigen::MatrixXd conventional_forward(const ConventionalLayer& layer,
                                     const Eigen::MatrixXd& input,
                                     ConventionalCache* cache) {
  check_input(input, layer.fan_in(), "conventional_forward");
  Eigen::MatrixXd preact = (input * layer.w).rowwise() + layer.b.transpose();
  if (cache) {
    cache->input = input;
    cache->preact = preact;
    cache->valid = true;
  }
  return activate(preact, layer.activation);
}

QuadraticGradients quadratic_backward(const QuadraticLayer& layer,
                                      const QuadraticCache& cache,
                                      const Eigen::MatrixXd& upstream) {
  if (!cache.valid)
    throw UsageError("quadratic_backward: no forward cache for this layer");
  if (upstream.rows() != cache.input.rows() ||
      upstream.cols() != layer.fan_out())
    throw InvalidInputError("quadratic_backward: upstream shape mismatch");

  Eigen::MatrixXd dz =
      upstream.cwiseProduct(activate_grad(cache.preact, layer.activation));
  Eigen::MatrixXd dz_rhs = dz.cwiseProduct(cache.rhs);  // through the lhs path
  Eigen::MatrixXd dz_lhs = dz.cwiseProduct(cache.lhs);  // through the rhs path
  Eigen::MatrixXd squares = cache.input.cwiseProduct(cache.input);

  QuadraticGradients g;
  g.w1 = cache.input.transpose() * dz_rhs;
  g.b1 = dz_rhs.colwise().sum();
  g.w2 = cache.input.transpose() * dz_lhs;
  g.b2 = dz_lhs.colwise().sum();
  g.w3 = squares.transpose() * dz;
  g.b3 = dz.colwise().sum();
  g.input = dz_rhs * layer.w1.transpose() + dz_lhs * layer.w2.transpose() +
            2.0 * cache.input.cwiseProduct(dz * layer.w3.transpose());
  if (layer.strict_invariant) {
    g.w1.setZero();
    g.w2.setZero();
  }
  return g;
}

ConventionalGradients conventional_backward(const ConventionalLayer& layer,
                                            const ConventionalCache& cache,
                                            const Eigen::MatrixXd& upstream) {
  if (!cache.valid)
    throw UsageError("conventional_backward: no forward cache for this layer");
  if (upstream.rows() != cache.input.rows() ||
      upstream.cols() != layer.fan_out())
    throw InvalidInputError("conventional_backward: upstream shape mismatch");

  Eigen::MatrixXd dz =
      upstream.cwiseProduct(activate_grad(cache.preact, layer.activation));
  ConventionalGradients g;
  g.w = cache.input.transpose() * dz;
  g.b = dz.colwise().sum();
  g.input = dz * layer.w.transpose();
  return g;
}

namespace {

double glorot_bound(Eigen::Index fan_in, Eigen::Index fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

Eigen::MatrixXd uniform_matrix(Eigen::Index rows, Eigen::Index cols,
                               double bound, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(-bound, bound);
  return m;
}

}  // namespace

QuadraticLayer init_quadratic(Eigen::Index fan_in, Eigen::Index fan_out,
                              std::uint64_t seed, bool strict) {
  if (fan_in <= 0 || fan_out <= 0)
    throw InvalidInputError("init_quadratic: non-positive dimension");
  Rng rng(seed);
  const double bound = glorot_bound(fan_in, fan_out);

  QuadraticLayer layer;
  layer.strict_invariant = strict;
  layer.w1 = strict ? Eigen::MatrixXd::Zero(fan_in, fan_out).eval()
                    : uniform_matrix(fan_in, fan_out, bound, rng);
  layer.w2 = Eigen::MatrixXd::Zero(fan_in, fan_out);
  layer.w3 = strict ? uniform_matrix(fan_in, fan_out, bound, rng)
                    : Eigen::MatrixXd::Zero(fan_in, fan_out).eval();
  layer.b1 = Eigen::VectorXd::Zero(fan_out);
  layer.b2 = Eigen::VectorXd::Ones(fan_out);
  layer.b3 = Eigen::VectorXd::Zero(fan_out);
  return layer;
}

ConventionalLayer init_conventional(Eigen::Index fan_in, Eigen::Index fan_out,
                                    std::uint64_t seed) {
  if (fan_in <= 0 || fan_out <= 0)
    throw InvalidInputError("init_conventional: non-positive dimension");
  Rng rng(seed);
  ConventionalLayer layer;
  layer.w = uniform_matrix(fan_in, fan_out, glorot_bound(fan_in, fan_out), rng);
  layer.b = Eigen::VectorXd::Zero(fan_out);
  return layer;
}

namespace {

constexpr double kKinkGuard = 1e-2;  // min |preact| so the FD stencil is clean

struct FlatView {
  std::string name;
  double* data;
  Eigen::Index size;
};

double rel_error(double a, double n) {
  return std::abs(a - n) / std::max({1.0, std::abs(a), std::abs(n)});
}

// Shared FD driver: objective J = sum(forward(...) o upstream).
template <typename Forward>
void check_coords(const std::vector<FlatView>& views,
                  const std::vector<std::pair<std::string, double>>& analytic,
                  Forward forward_objective, double h, GradCheckReport& report) {
  std::size_t k = 0;
  for (const FlatView& view : views) {
    for (Eigen::Index i = 0; i < view.size; ++i, ++k) {
      double saved = view.data[i];
      view.data[i] = saved + h;
      double plus = forward_objective();
      view.data[i] = saved - h;
      double minus = forward_objective();
      view.data[i] = saved;
      double numeric = (plus - minus) / (2.0 * h);
      double err = rel_error(analytic[k].second, numeric);
      if (err > report.max_rel_error) {
        report.max_rel_error = err;
        report.worst = analytic[k].first;
      }
    }
  }
}

std::vector<std::pair<std::string, double>> flatten(
    const std::vector<FlatView>& views) {
  std::vector<std::pair<std::string, double>> flat;
  for (const FlatView& view : views)
    for (Eigen::Index i = 0; i < view.size; ++i)
      flat.emplace_back(view.name + "[" + std::to_string(i) + "]",
                        view.data[i]);
  return flat;
}

}  // namespace

GradCheckReport grad_check_quadratic(int n_trials, double h, double tolerance,
                                     std::uint64_t seed) {
  if (n_trials <= 0 || h <= 0 || tolerance <= 0)
    throw InvalidInputError("grad_check: non-positive argument");
  Rng rng(seed);
  GradCheckReport report;
  report.trials = n_trials;

  for (int trial = 0; trial < n_trials; ++trial) {
    Eigen::Index fan_in = 2 + static_cast<Eigen::Index>(rng.integer(4));
    Eigen::Index fan_out = 1 + static_cast<Eigen::Index>(rng.integer(4));
    Eigen::Index batch = 1 + static_cast<Eigen::Index>(rng.integer(3));
    QuadraticLayer layer;
    layer.activation =
        (trial % 2 == 0) ? Activation::kReLU : Activation::kIdentity;
    layer.strict_invariant = false;

    Eigen::MatrixXd input, upstream;
    QuadraticCache cache;
    // Redraw until no pre-activation is near a ReLU kink.
    do {
      layer.w1 = uniform_matrix(fan_in, fan_out, 1.0, rng);
      layer.w2 = uniform_matrix(fan_in, fan_out, 1.0, rng);
      layer.w3 = uniform_matrix(fan_in, fan_out, 1.0, rng);
      layer.b1 = uniform_matrix(fan_out, 1, 1.0, rng);
      layer.b2 = uniform_matrix(fan_out, 1, 1.0, rng);
      layer.b3 = uniform_matrix(fan_out, 1, 1.0, rng);
      input = uniform_matrix(batch, fan_in, 2.0, rng);
      upstream = uniform_matrix(batch, fan_out, 1.0, rng);
      quadratic_forward(layer, input, &cache);
    } while (layer.activation == Activation::kReLU &&
             cache.preact.cwiseAbs().minCoeff() < kKinkGuard);

    QuadraticGradients g = quadratic_backward(layer, cache, upstream);

    std::vector<FlatView> param_views{
        {"w1", layer.w1.data(), layer.w1.size()},
        {"w2", layer.w2.data(), layer.w2.size()},
        {"w3", layer.w3.data(), layer.w3.size()},
        {"b1", layer.b1.data(), layer.b1.size()},
        {"b2", layer.b2.data(), layer.b2.size()},
        {"b3", layer.b3.data(), layer.b3.size()},
        {"input", input.data(), input.size()}};
    std::vector<FlatView> grad_views{
        {"w1", g.w1.data(), g.w1.size()},    {"w2", g.w2.data(), g.w2.size()},
        {"w3", g.w3.data(), g.w3.size()},    {"b1", g.b1.data(), g.b1.size()},
        {"b2", g.b2.data(), g.b2.size()},    {"b3", g.b3.data(), g.b3.size()},
        {"input", g.input.data(), g.input.size()}};

    auto objective = [&]() {
      return quadratic_forward(layer, input, nullptr)
          .cwiseProduct(upstream)
          .sum();
    };
    check_coords(param_views, flatten(grad_views), objective, h, report);
  }
  report.passed = report.max_rel_error <= tolerance;
  return report;
}

GradCheckReport grad_check_conventional(int n_trials, double h,
                                        double tolerance, std::uint64_t seed) {
  if (n_trials <= 0 || h <= 0 || tolerance <= 0)
    throw InvalidInputError("grad_check: non-positive argument");
  Rng rng(seed);
  GradCheckReport report;
  report.trials = n_trials;

  for (int trial = 0; trial < n_trials; ++trial) {
    Eigen::Index fan_in = 2 + static_cast<Eigen::Index>(rng.integer(4));
    Eigen::Index fan_out = 1 + static_cast<Eigen::Index>(rng.integer(4));
    Eigen::Index batch = 1 + static_cast<Eigen::Index>(rng.integer(3));
    ConventionalLayer layer;
    layer.activation =
        (trial % 2 == 0) ? Activation::kReLU : Activation::kIdentity;

    Eigen::MatrixXd input, upstream;
    ConventionalCache cache;
    do {
      layer.w = uniform_matrix(fan_in, fan_out, 1.0, rng);
      layer.b = uniform_matrix(fan_out, 1, 1.0, rng);
      input = uniform_matrix(batch, fan_in, 2.0, rng);
      upstream = uniform_matrix(batch, fan_out, 1.0, rng);
      conventional_forward(layer, input, &cache);
    } while (layer.activation == Activation::kReLU &&
             cache.preact.cwiseAbs().minCoeff() < kKinkGuard);

    ConventionalGradients g = conventional_backward(layer, cache, upstream);

    std::vector<FlatView> param_views{{"w", layer.w.data(), layer.w.size()},
                                      {"b", layer.b.data(), layer.b.size()},
                                      {"input", input.data(), input.size()}};
    std::vector<FlatView> grad_views{{"w", g.w.data(), g.w.size()},
                                     {"b", g.b.data(), g.b.size()},
                                     {"input", g.input.data(), g.input.size()}};

    auto objective = [&]() {
      return conventional_forward(layer, input, nullptr)
          .cwiseProduct(upstream)
          .sum();
    };
    check_coords(param_views, flatten(grad_views), objective, h, report);
  }
  report.passed = report.max_rel_error <= tolerance;
  return report;
}

}  // namespace qc
