#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "qc/errors.hpp"

namespace qc {

enum class Activation { kReLU, kIdentity };

// Dense layer of quadratic neurons. For a batch F (rows are samples) the
// pre-activation is (F w1 + b1) o (F w2 + b2) + (F o F) w3 + b3, applied
// column-per-neuron; o is the elementwise product.
// strict_invariant freezes w1 = w2 = 0, making the output depend on the input
// only through F o F (bitwise invariant under per-column sign flips).
struct QuadraticLayer {
  Eigen::MatrixXd w1, w2, w3;  // fan_in x fan_out
  Eigen::VectorXd b1, b2, b3;  // fan_out
  Activation activation = Activation::kReLU;
  bool strict_invariant = false;

  Eigen::Index fan_in() const { return w1.rows(); }
  Eigen::Index fan_out() const { return w1.cols(); }
};

struct ConventionalLayer {
  Eigen::MatrixXd w;  // fan_in x fan_out
  Eigen::VectorXd b;  // fan_out
  Activation activation = Activation::kReLU;

  Eigen::Index fan_in() const { return w.rows(); }
  Eigen::Index fan_out() const { return w.cols(); }
};

// Forward caches: everything backward needs. Default-constructed caches are
// invalid; passing one to backward is a usage error.
struct QuadraticCache {
  Eigen::MatrixXd input;    // F
  Eigen::MatrixXd lhs;      // F w1 + b1
  Eigen::MatrixXd rhs;      // F w2 + b2
  Eigen::MatrixXd preact;   // lhs o rhs + (F o F) w3 + b3
  bool valid = false;
};

struct ConventionalCache {
  Eigen::MatrixXd input;
  Eigen::MatrixXd preact;
  bool valid = false;
};

// Gradients for every parameter tensor plus the input.
struct QuadraticGradients {
  Eigen::MatrixXd w1, w2, w3;
  Eigen::VectorXd b1, b2, b3;
  Eigen::MatrixXd input;
};

struct ConventionalGradients {
  Eigen::MatrixXd w;
  Eigen::VectorXd b;
  Eigen::MatrixXd input;
};

// Batched forward; rows of `input` are samples. Pass a cache to enable
// backward. Throws NumericalError on non-finite input, InvalidInputError on a
// width mismatch.
Eigen::MatrixXd quadratic_forward(const QuadraticLayer& layer,
                                  const Eigen::MatrixXd& input,
                                  QuadraticCache* cache = nullptr);
Eigen::MatrixXd conventional_forward(const ConventionalLayer& layer,
                                     const Eigen::MatrixXd& input,
                                     ConventionalCache* cache = nullptr);

// `upstream` is dLoss/dOutput for the cached batch. Strict layers report
// exactly zero w1/w2 gradients.
QuadraticGradients quadratic_backward(const QuadraticLayer& layer,
                                      const QuadraticCache& cache,
                                      const Eigen::MatrixXd& upstream);
ConventionalGradients conventional_backward(const ConventionalLayer& layer,
                                            const ConventionalCache& cache,
                                            const Eigen::MatrixXd& upstream);

// Glorot-uniform w1 with w2 = 0, b2 = 1, w3 = 0: the layer starts out
// computing exactly what a conventional layer with weights w1 would.
// strict mode instead freezes w1 = w2 = 0 and draws w3 uniformly.
QuadraticLayer init_quadratic(Eigen::Index fan_in, Eigen::Index fan_out,
                              std::uint64_t seed, bool strict = false);
ConventionalLayer init_conventional(Eigen::Index fan_in, Eigen::Index fan_out,
                                    std::uint64_t seed);

inline Eigen::Index param_count(const QuadraticLayer& layer) {
  return 3 * layer.fan_in() * layer.fan_out() + 3 * layer.fan_out();
}
inline Eigen::Index param_count(const ConventionalLayer& layer) {
  return layer.fan_in() * layer.fan_out() + layer.fan_out();
}

struct GradCheckReport {
  double max_rel_error = 0.0;
  int trials = 0;
  bool passed = false;
  std::string worst;  // which tensor and coordinate was worst
};

// Central-difference check of the analytic gradients over randomly sampled
// layers, inputs and upstreams. Relative error is |a - n| / max(1, |a|, |n|).
// Samples are redrawn while any pre-activation sits within 1e-2 of a ReLU
// kink, so the finite-difference stencil never straddles one.
GradCheckReport grad_check_quadratic(int n_trials, double h, double tolerance,
                                     std::uint64_t seed);
GradCheckReport grad_check_conventional(int n_trials, double h,
                                        double tolerance, std::uint64_t seed);

}  // namespace qc
