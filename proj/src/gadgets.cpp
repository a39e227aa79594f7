#include "qc/gadgets.hpp"

#include <cmath>
#include <map>

namespace qc {

namespace {

// Strictly sequential dense-layer evaluation (ascending input index). Eigen's
// vectorized reductions may group terms differently for different column
// paddings; a fixed order is what makes equal-value readout blocks cancel
// bitwise in eval_gadget.
Eigen::VectorXd seq_forward(const ConventionalLayer& layer,
                            const Eigen::VectorXd& h) {
  Eigen::VectorXd out(layer.fan_out());
  for (Eigen::Index j = 0; j < layer.fan_out(); ++j) {
    double acc = layer.b(j);
    for (Eigen::Index i = 0; i < layer.fan_in(); ++i)
      acc += h(i) * layer.w(i, j);
    out(j) = (layer.activation == Activation::kReLU) ? std::max(acc, 0.0) : acc;
  }
  return out;
}

Eigen::VectorXd seq_forward(const QuadraticLayer& layer,
                            const Eigen::VectorXd& h) {
  Eigen::VectorXd out(layer.fan_out());
  for (Eigen::Index j = 0; j < layer.fan_out(); ++j) {
    double lhs = layer.b1(j), rhs = layer.b2(j), pow_term = layer.b3(j);
    for (Eigen::Index i = 0; i < layer.fan_in(); ++i) {
      lhs += h(i) * layer.w1(i, j);
      rhs += h(i) * layer.w2(i, j);
      pow_term += h(i) * h(i) * layer.w3(i, j);
    }
    double z = lhs * rhs + pow_term;
    out(j) = (layer.activation == Activation::kReLU) ? std::max(z, 0.0) : z;
  }
  return out;
}

Eigen::Index layer_fan_in(const GadgetLayer& layer) {
  return std::visit([](const auto& l) { return l.fan_in(); }, layer);
}
Eigen::Index layer_fan_out(const GadgetLayer& layer) {
  return std::visit([](const auto& l) { return l.fan_out(); }, layer);
}
Eigen::Index layer_stored_params(const GadgetLayer& layer) {
  if (const auto* q = std::get_if<QuadraticLayer>(&layer)) return param_count(*q);
  return param_count(std::get<ConventionalLayer>(layer));
}

Eigen::Index count_nonzero(const Eigen::MatrixXd& m) {
  return (m.array() != 0.0).count();
}

}  // namespace

double eval_gadget(const GadgetNetwork& net, const Eigen::VectorXd& input) {
  if (input.size() != net.input_arity)
    throw InvalidInputError("eval_gadget: input arity mismatch");
  if (!input.allFinite()) throw NumericalError("eval_gadget: non-finite input");

  Eigen::VectorXd h = input;
  for (const GadgetLayer& layer : net.layers)
    h = std::visit([&](const auto& l) { return seq_forward(l, h); }, layer);

  std::vector<std::pair<Eigen::Index, Eigen::Index>> blocks =
      net.readout_blocks;
  if (blocks.empty()) blocks.emplace_back(0, net.readout.size());

  double out = 0.0;
  for (const auto& [begin, end] : blocks) {
    double partial = 0.0;
    for (Eigen::Index i = begin; i < end; ++i)
      partial += net.readout(i) * h(i);
    out += partial;
  }
  return out;
}

Eigen::Index unit_count(const GadgetNetwork& net) {
  Eigen::Index units = 0;
  for (const GadgetLayer& layer : net.layers) units += layer_fan_out(layer);
  return units;
}

Eigen::Index nonzero_param_count(const GadgetNetwork& net) {
  Eigen::Index count = 0;
  for (const GadgetLayer& layer : net.layers) {
    if (const auto* q = std::get_if<QuadraticLayer>(&layer)) {
      count += count_nonzero(q->w1) + count_nonzero(q->w2) +
               count_nonzero(q->w3) + count_nonzero(q->b1) +
               count_nonzero(q->b2) + count_nonzero(q->b3);
    } else {
      const auto& c = std::get<ConventionalLayer>(layer);
      count += count_nonzero(c.w) + count_nonzero(c.b);
    }
  }
  return count;
}

void validate(const GadgetNetwork& net) {
  Eigen::Index width = net.input_arity;
  Eigen::Index stored = 0;
  for (const GadgetLayer& layer : net.layers) {
    if (layer_fan_in(layer) != width)
      throw InvalidInputError("gadget network: layer widths do not chain");
    width = layer_fan_out(layer);
    stored += layer_stored_params(layer);
  }
  if (net.readout.size() != width)
    throw InvalidInputError("gadget network: readout width mismatch");
  if (stored != net.param_count)
    throw InvalidInputError("gadget network: stored parameter tally is off");
  Eigen::Index covered = 0;
  for (const auto& [begin, end] : net.readout_blocks) {
    if (begin != covered || end < begin)
      throw InvalidInputError("gadget network: readout blocks must tile in order");
    covered = end;
  }
  if (!net.readout_blocks.empty() && covered != net.readout.size())
    throw InvalidInputError("gadget network: readout blocks must cover the readout");
}

GadgetNetwork quadratic_multiplier() {
  QuadraticLayer layer;
  layer.activation = Activation::kReLU;
  layer.w1 = Eigen::MatrixXd::Zero(2, 2);
  layer.w2 = Eigen::MatrixXd::Zero(2, 2);
  layer.w3 = Eigen::MatrixXd::Zero(2, 2);
  layer.b1 = Eigen::VectorXd::Zero(2);
  layer.b2 = Eigen::VectorXd::Zero(2);
  layer.b3 = Eigen::VectorXd::Zero(2);
  // Neuron 0: relu(x * y); neuron 1: relu(-x * y). Combined as their
  // difference this is x*y exactly, one branch always being zero.
  layer.w1(0, 0) = 1.0;
  layer.w2(1, 0) = 1.0;
  layer.w1(0, 1) = 1.0;
  layer.w2(1, 1) = -1.0;

  GadgetNetwork net;
  net.input_arity = 2;
  net.layers.emplace_back(std::move(layer));
  net.readout = Eigen::Vector2d(1.0, -1.0);
  net.param_count = 3 * 2 * 2 + 3 * 2;
  net.exact = true;
  return net;
}

namespace {

int tooth_steps(double eps) {
  return std::max(1, static_cast<int>(std::ceil(std::log2(1.0 / eps))));
}

// Tooth function g(t) = 2 relu(t) - 4 relu(t - 1/2) + 2 relu(t - 1), the
// 1-periodic hat on [0,1]. Composing it s times gives the sawtooth whose
// weighted sum linearly interpolates t^2 at the dyadic knots k/2^m:
//   t^2 ~ t - sum_{s=1..m} g^(s)(t) / 4^s, error <= 4^-(m+1).
//
// Chain state per layer k >= 2: [r1 r2 r3 ct cS] where (r1, r2, r3) are the
// relu features of g^(k-1)(t), ct carries t, and cS carries the partial sum
// sum_{s<k} g^(s)(t)/4^s. Everything carried is nonnegative, so a plain ReLU
// wire preserves it.
void chain_layer_block(int k, double bound, Eigen::MatrixXd& w,
                       Eigen::VectorXd& b) {
  if (k == 1) {
    // (a, b) = (relu(u), relu(-u)) -> relu features of t = (a + b) / bound.
    w = Eigen::MatrixXd::Zero(2, 3);
    b = Eigen::VectorXd::Zero(3);
    for (int j = 0; j < 3; ++j) {
      w(0, j) = 1.0 / bound;
      w(1, j) = 1.0 / bound;
    }
    b << 0.0, -0.5, -1.0;
    return;
  }
  const int in_width = (k == 2) ? 3 : 5;
  w = Eigen::MatrixXd::Zero(in_width, 5);
  b = Eigen::VectorXd::Zero(5);
  const double g_w[3] = {2.0, -4.0, 2.0};
  for (int j = 0; j < 3; ++j) {
    for (int i = 0; i < 3; ++i) w(i, j) = g_w[i];
    b(j) = (j == 0) ? 0.0 : (j == 1 ? -0.5 : -1.0);
  }
  if (k == 2) {
    w(0, 3) = 1.0;  // t is r1 of the first chain layer
  } else {
    w(3, 3) = 1.0;
  }
  const double scale = std::pow(0.25, k - 1);
  for (int i = 0; i < 3; ++i) w(i, 4) = g_w[i] * scale;
  if (k >= 3) w(4, 4) = 1.0;
}

Eigen::VectorXd chain_readout(int m, double bound) {
  const double b2 = bound * bound;
  if (m == 1) {
    Eigen::VectorXd r(3);
    r << b2 / 2.0, b2, -b2 / 2.0;
    return r;
  }
  const double scale = b2 * std::pow(0.25, m);
  Eigen::VectorXd r(5);
  r << -2.0 * scale, 4.0 * scale, -2.0 * scale, b2, -b2;
  return r;
}

ConventionalLayer make_layer(Eigen::MatrixXd w, Eigen::VectorXd b) {
  ConventionalLayer layer;
  layer.w = std::move(w);
  layer.b = std::move(b);
  layer.activation = Activation::kReLU;
  return layer;
}

void check_square_args(double bound, double eps, const char* who) {
  if (!(bound > 0.0) || !std::isfinite(bound))
    throw InvalidInputError(std::string(who) + ": bound must be positive");
  if (!(eps > 0.0) || !(eps < 1.0))
    throw InvalidInputError(std::string(who) + ": eps must lie in (0, 1)");
}

Eigen::Index stored_params(const std::vector<GadgetLayer>& layers) {
  Eigen::Index total = 0;
  for (const GadgetLayer& layer : layers) total += layer_stored_params(layer);
  return total;
}

}  // namespace

GadgetNetwork relu_square(double bound, double eps) {
  check_square_args(bound, eps, "relu_square");
  const int m = tooth_steps(eps);

  GadgetNetwork net;
  net.input_arity = 1;
  // x -> (relu(x), relu(-x)); their sum is |x| and |x|^2 = x^2.
  Eigen::MatrixXd w0(1, 2);
  w0 << 1.0, -1.0;
  net.layers.emplace_back(make_layer(w0, Eigen::VectorXd::Zero(2)));
  for (int k = 1; k <= m; ++k) {
    Eigen::MatrixXd w;
    Eigen::VectorXd b;
    chain_layer_block(k, bound, w, b);
    net.layers.emplace_back(make_layer(std::move(w), std::move(b)));
  }
  net.readout = chain_readout(m, bound);
  net.param_count = stored_params(net.layers);
  net.error_budget = eps * bound * bound / 4.0;
  net.input_bound = bound;
  return net;
}

GadgetNetwork relu_multiplier(double bound, double eps) {
  check_square_args(bound, eps, "relu_multiplier");
  // Polarization: three unit-domain squares at arguments (x+y)/2M, x/2M,
  // y/2M; each contributes sup error <= eps_sq/4, combined weight 2M^2 each.
  const double eps_sq =
      std::min(0.5, 2.0 * eps / (3.0 * bound * bound));
  const int m = tooth_steps(eps_sq);

  GadgetNetwork net;
  net.input_arity = 2;

  const double c = 1.0 / (2.0 * bound);
  Eigen::MatrixXd w0 = Eigen::MatrixXd::Zero(2, 6);
  // (relu(u1), relu(-u1), relu(u2), relu(-u2), relu(u3), relu(-u3))
  w0(0, 0) = c;  w0(1, 0) = c;
  w0(0, 1) = -c; w0(1, 1) = -c;
  w0(0, 2) = c;
  w0(0, 3) = -c;
  w0(1, 4) = c;
  w0(1, 5) = -c;
  net.layers.emplace_back(make_layer(w0, Eigen::VectorXd::Zero(6)));

  for (int k = 1; k <= m; ++k) {
    Eigen::MatrixXd block;
    Eigen::VectorXd block_b;
    chain_layer_block(k, 1.0, block, block_b);
    Eigen::MatrixXd w =
        Eigen::MatrixXd::Zero(3 * block.rows(), 3 * block.cols());
    Eigen::VectorXd b(3 * block_b.size());
    for (int s = 0; s < 3; ++s) {
      w.block(s * block.rows(), s * block.cols(), block.rows(), block.cols()) =
          block;
      b.segment(s * block_b.size(), block_b.size()) = block_b;
    }
    net.layers.emplace_back(make_layer(std::move(w), std::move(b)));
  }

  Eigen::VectorXd sq_readout = chain_readout(m, 1.0);
  const Eigen::Index w_sq = sq_readout.size();
  const double scale = 2.0 * bound * bound;
  net.readout.resize(3 * w_sq);
  net.readout.segment(0, w_sq) = scale * sq_readout;
  net.readout.segment(w_sq, w_sq) = -scale * sq_readout;
  net.readout.segment(2 * w_sq, w_sq) = -scale * sq_readout;
  net.readout_blocks = {{0, w_sq}, {w_sq, 2 * w_sq}, {2 * w_sq, 3 * w_sq}};

  net.param_count = stored_params(net.layers);
  net.error_budget = eps;
  net.input_bound = bound;
  return net;
}

double elementary_symmetric_even(const Eigen::VectorXd& x, int k) {
  const int d = static_cast<int>(x.size());
  if (d == 0) throw InvalidInputError("elementary_symmetric_even: empty input");
  if (k < 1 || k > d)
    throw InvalidInputError("elementary_symmetric_even: k out of range");
  if (!x.allFinite())
    throw NumericalError("elementary_symmetric_even: non-finite input");
  // Newton-free prefix DP over the squared entries.
  std::vector<double> e(static_cast<std::size_t>(k) + 1, 0.0);
  e[0] = 1.0;
  for (int i = 0; i < d; ++i) {
    const double y = x(i) * x(i);
    for (int j = std::min(k, i + 1); j >= 1; --j) e[j] += e[j - 1] * y;
  }
  return e[static_cast<std::size_t>(k)];
}

namespace {

void check_terms(const std::vector<SymmetricMonomial>& terms) {
  if (terms.empty())
    throw InvalidInputError("symmetric terms: need at least one monomial");
  const Eigen::Index n = terms[0].exponents.rows();
  const Eigen::Index d = terms[0].exponents.cols();
  if (n == 0 || d == 0)
    throw InvalidInputError("symmetric terms: empty exponent table");
  for (const SymmetricMonomial& term : terms) {
    if (term.exponents.rows() != n || term.exponents.cols() != d)
      throw InvalidInputError("symmetric terms: exponent shapes differ");
    if (!std::isfinite(term.coefficient))
      throw NumericalError("symmetric terms: non-finite coefficient");
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index a = 0; a < d; ++a) {
        const int p = term.exponents(i, a);
        if (p < 0 || p % 2 != 0)
          throw InvalidInputError(
              "symmetric terms: exponents must be even and non-negative");
      }
  }
}

}  // namespace

double eval_monomial(const Eigen::MatrixXd& x, const SymmetricMonomial& term) {
  if (x.rows() != term.exponents.rows() || x.cols() != term.exponents.cols())
    throw InvalidInputError("eval_monomial: shape mismatch");
  check_terms({term});
  if (!x.allFinite()) throw NumericalError("eval_monomial: non-finite input");

  double product = 1.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index a = 0; a < x.cols(); ++a) {
      const int p = term.exponents(i, a);
      if (p == 0) continue;
      const double sq = x(i, a) * x(i, a);
      double value = sq;
      for (int k = 2; k <= p / 2; ++k) value *= sq;
      product *= value;
    }
  return product;
}

SymmetricApproximator compile_approximator(
    const std::vector<SymmetricMonomial>& terms, Backend backend,
    double input_bound, double delta) {
  check_terms(terms);
  if (!(input_bound > 0.0) || !std::isfinite(input_bound))
    throw InvalidInputError("compile_approximator: input bound must be positive");
  if (backend == Backend::kConventional && !(delta > 0.0))
    throw InvalidInputError("compile_approximator: delta must be positive");

  SymmetricApproximator ap;
  ap.terms = terms;
  ap.backend = backend;
  ap.delta = delta;
  ap.input_bound = input_bound;
  ap.points = terms[0].exponents.rows();
  ap.dims = terms[0].exponents.cols();

  using Node = SymmetricApproximator::Node;
  std::vector<double> bound, kappa;
  const double slack = std::min(1.0, delta / 2.0);
  std::map<Eigen::Index, int> input_nodes;
  int const_node = -1;

  auto add_input = [&](Eigen::Index flat) {
    auto it = input_nodes.find(flat);
    if (it != input_nodes.end()) return it->second;
    Node node;
    node.kind = Node::Kind::kInput;
    node.input_index = flat;
    ap.nodes.push_back(node);
    bound.push_back(input_bound);
    kappa.push_back(0.0);
    input_nodes[flat] = static_cast<int>(ap.nodes.size()) - 1;
    return input_nodes[flat];
  };
  auto add_multiply = [&](int lhs, int rhs) {
    Node node;
    node.kind = Node::Kind::kMultiply;
    node.lhs = lhs;
    node.rhs = rhs;
    ap.nodes.push_back(node);
    bound.push_back(bound[lhs] * bound[rhs]);
    kappa.push_back(1.0 + (bound[lhs] + slack) * kappa[rhs] +
                    (bound[rhs] + slack) * kappa[lhs]);
    return static_cast<int>(ap.nodes.size()) - 1;
  };

  for (const SymmetricMonomial& term : terms) {
    std::vector<int> factors;
    for (Eigen::Index i = 0; i < ap.points; ++i)
      for (Eigen::Index a = 0; a < ap.dims; ++a) {
        const int p = term.exponents(i, a);
        if (p == 0) continue;
        const int in = add_input(i * ap.dims + a);
        const int sq = add_multiply(in, in);
        int cur = sq;
        for (int k = 2; k <= p / 2; ++k) cur = add_multiply(cur, sq);
        factors.push_back(cur);
      }
    int root;
    if (factors.empty()) {
      if (const_node < 0) {
        Node node;
        node.kind = Node::Kind::kConstOne;
        ap.nodes.push_back(node);
        bound.push_back(1.0);
        kappa.push_back(0.0);
        const_node = static_cast<int>(ap.nodes.size()) - 1;
      }
      root = const_node;
    } else {
      root = factors[0];
      for (std::size_t j = 1; j < factors.size(); ++j)
        root = add_multiply(root, factors[j]);
    }
    ap.term_roots.emplace_back(root, term.coefficient);
  }

  double eps = 0.0;
  if (backend == Backend::kConventional) {
    double weight = 0.0, kappa_max = 0.0;
    for (const auto& [root, coeff] : ap.term_roots) {
      weight += std::max(1.0, std::abs(coeff)) * kappa[root];
      kappa_max = std::max(kappa_max, kappa[root]);
    }
    if (weight > 0.0)
      eps = std::min({0.5, (delta / 2.0) / weight, slack / kappa_max});
  }

  for (auto& node : ap.nodes) {
    if (node.kind != Node::Kind::kMultiply) continue;
    node.gadget = static_cast<int>(ap.gadgets.size());
    if (backend == Backend::kQuadratic) {
      ap.gadgets.push_back(quadratic_multiplier());
    } else {
      const double m_gadget =
          std::max(bound[node.lhs], bound[node.rhs]) + slack;
      ap.gadgets.push_back(relu_multiplier(m_gadget, eps));
    }
  }
  return ap;
}

double evaluate(const SymmetricApproximator& ap, const Eigen::MatrixXd& x) {
  if (x.rows() != ap.points || x.cols() != ap.dims)
    throw InvalidInputError("evaluate: input shape mismatch");
  if (!x.allFinite()) throw NumericalError("evaluate: non-finite input");

  using Node = SymmetricApproximator::Node;
  std::vector<double> value(ap.nodes.size(), 0.0);
  for (std::size_t id = 0; id < ap.nodes.size(); ++id) {
    const Node& node = ap.nodes[id];
    switch (node.kind) {
      case Node::Kind::kInput:
        value[id] = x(node.input_index / ap.dims, node.input_index % ap.dims);
        break;
      case Node::Kind::kConstOne:
        value[id] = 1.0;
        break;
      case Node::Kind::kMultiply:
        value[id] = eval_gadget(
            ap.gadgets[node.gadget],
            Eigen::Vector2d(value[node.lhs], value[node.rhs]));
        break;
    }
  }
  double out = 0.0;
  for (const auto& [root, coeff] : ap.term_roots) out += coeff * value[root];
  return out;
}

Eigen::Index param_count(const SymmetricApproximator& ap) {
  Eigen::Index total = 0;
  for (const GadgetNetwork& g : ap.gadgets) total += g.param_count;
  return total;
}

Eigen::Index nonzero_param_count(const SymmetricApproximator& ap) {
  Eigen::Index total = 0;
  for (const GadgetNetwork& g : ap.gadgets) total += nonzero_param_count(g);
  return total;
}

Eigen::Index unit_count(const SymmetricApproximator& ap) {
  Eigen::Index total = 0;
  for (const GadgetNetwork& g : ap.gadgets) total += unit_count(g);
  return total;
}

}  // namespace qc
