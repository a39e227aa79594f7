#pragma once

#include <variant>
#include <vector>

#include "qc/neurons.hpp"

namespace qc {

using GadgetLayer = std::variant<ConventionalLayer, QuadraticLayer>;

// A small feed-forward network built from explicit layer weights, plus a
// fixed linear readout over the last layer (the readout holds structural
// combination coefficients, not trained parameters).
//
// Evaluation sums strictly sequentially, unit by unit and readout block by
// readout block. That pins the floating-point summation order, so two blocks
// fed bitwise-equal inputs produce bitwise-equal outputs and algebraically
// exact cancellations stay exact in floating point (e.g. multiplier(x,0)).
struct GadgetNetwork {
  std::vector<GadgetLayer> layers;
  Eigen::Index input_arity = 0;
  Eigen::VectorXd readout;
  // Readout partial sums are taken per [begin, end) block, then combined in
  // order. Empty means one block spanning the whole readout.
  std::vector<std::pair<Eigen::Index, Eigen::Index>> readout_blocks;
  Eigen::Index param_count = 0;  // stored parameters, summed over layers
  double error_budget = 0.0;     // sup error bound on the stated domain
  bool exact = false;
  double input_bound = 0.0;      // domain half-width M (0 = unrestricted)
};

double eval_gadget(const GadgetNetwork& net, const Eigen::VectorXd& input);

// Hidden units: the sum of layer fan-outs.
Eigen::Index unit_count(const GadgetNetwork& net);
// Stored parameter entries that are exactly nonzero.
Eigen::Index nonzero_param_count(const GadgetNetwork& net);
// Checks width chaining, readout size and the stored param_count tally.
void validate(const GadgetNetwork& net);

// Exact product of two inputs: one hidden layer of 2 quadratic ReLU neurons
// computing relu(xy) - relu(-xy), 4 nonzero parameters in total.
GadgetNetwork quadratic_multiplier();

// Conventional-ReLU approximation of x^2 on [-bound, bound] with sup error
// <= eps * bound^2 / 4, exact at inputs k * bound / 2^m. Unit count grows
// linearly in log2(1/eps). Requires bound > 0 and eps in (0, 1).
GadgetNetwork relu_square(double bound, double eps);

// Conventional-ReLU approximation of x*y on [-bound, bound]^2 with sup error
// <= eps, built from three relu_square blocks via the polarization identity
// x*y = 2M^2 [((x+y)/2M)^2 - (x/2M)^2 - (y/2M)^2]. Exactly zero whenever
// either input is zero. Requires bound > 0 and eps in (0, 1).
GadgetNetwork relu_multiplier(double bound, double eps);

// Sum over k-subsets of squared entries: e_k(x_1^2, ..., x_d^2).
// Requires 1 <= k <= d.
double elementary_symmetric_even(const Eigen::VectorXd& x, int k);

// One monomial of a reflection-invariant polynomial basis: coefficient times
// the product of X(i, a)^exponents(i, a) with every exponent even.
struct SymmetricMonomial {
  Eigen::MatrixXi exponents;  // N x d, even non-negative entries
  double coefficient = 1.0;
};

// Direct product evaluation; all exponents zero gives 1.
// Throws InvalidInputError on odd or negative exponents or a shape mismatch.
double eval_monomial(const Eigen::MatrixXd& x, const SymmetricMonomial& term);

enum class Backend { kQuadratic, kConventional };

// A compiled sum of monomials. Each even power enters through a square
// (multiplier applied to (v, v)), so the whole evaluation touches raw inputs
// only through squares and is invariant under per-column sign flips.
//
// The realized network is kept as the list of multiplier gadget instances
// plus a wiring plan (a DAG of multiply nodes); terms are combined with their
// coefficients at the end.
struct SymmetricApproximator {
  struct Node {
    enum class Kind { kInput, kConstOne, kMultiply } kind = Kind::kConstOne;
    Eigen::Index input_index = 0;      // kInput: flat index into X (row-major)
    int lhs = -1, rhs = -1;            // kMultiply: operand node ids
    int gadget = -1;                   // kMultiply: index into gadgets
  };

  std::vector<SymmetricMonomial> terms;
  Backend backend = Backend::kQuadratic;
  double delta = 0.0;        // target sup-error budget (conventional backend)
  double input_bound = 0.0;  // entries of X assumed in [-bound, bound]
  Eigen::Index points = 0, dims = 0;

  std::vector<GadgetNetwork> gadgets;
  std::vector<Node> nodes;                         // topological order
  std::vector<std::pair<int, double>> term_roots;  // node id, coefficient
};

// Realizes sum_l c_l * prod X(i,a)^phi(i,a) with the chosen multiplier
// backend. The conventional backend assigns every gadget an equal error
// budget sized so the accumulated error stays within delta/2.
SymmetricApproximator compile_approximator(
    const std::vector<SymmetricMonomial>& terms, Backend backend,
    double input_bound, double delta);

double evaluate(const SymmetricApproximator& approx, const Eigen::MatrixXd& x);

Eigen::Index param_count(const SymmetricApproximator& approx);
Eigen::Index nonzero_param_count(const SymmetricApproximator& approx);
Eigen::Index unit_count(const SymmetricApproximator& approx);

}  // namespace qc
