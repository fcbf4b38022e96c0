#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "rng.hpp"

namespace qcr {

// Reverse-mode autodiff over a flat tape. Each node stores up to two
// parent indices together with the local partial derivatives evaluated
// at forward time, so the backward pass is a single reverse sweep with
// no virtual dispatch.
class Tape {
 public:
  struct Node {
    int a = -1, b = -1;
    double da = 0.0, db = 0.0;
  };

  int add_leaf(double value) {
    vals_.push_back(value);
    nodes_.push_back({});
    return static_cast<int>(vals_.size()) - 1;
  }

  int add_node(double value, int a, double da, int b = -1, double db = 0.0) {
    vals_.push_back(value);
    nodes_.push_back({a, b, da, db});
    return static_cast<int>(vals_.size()) - 1;
  }

  double value(int i) const { return vals_[i]; }
  double grad(int i) const { return grads_[i]; }
  size_t size() const { return vals_.size(); }

  void backward(int loss) {
    grads_.assign(vals_.size(), 0.0);
    grads_[loss] = 1.0;
    for (int i = loss; i >= 0; --i) {
      double g = grads_[i];
      if (g == 0.0) continue;
      const Node& n = nodes_[i];
      if (n.a >= 0) grads_[n.a] += g * n.da;
      if (n.b >= 0) grads_[n.b] += g * n.db;
    }
  }

  void clear() {
    vals_.clear();
    nodes_.clear();
    grads_.clear();
  }

 private:
  std::vector<double> vals_;
  std::vector<Node> nodes_;
  std::vector<double> grads_;
};

// Value handle on a tape. Cheap to copy; all arithmetic records nodes.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  Var() = default;
  Var(Tape& t, int i) : tape(&t), id(i) {}

  double val() const { return tape->value(id); }
  double grad() const { return tape->grad(id); }
};

inline Var leaf(Tape& t, double v) { return Var(t, t.add_leaf(v)); }

inline Var operator+(const Var& x, const Var& y) {
  return Var(*x.tape, x.tape->add_node(x.val() + y.val(), x.id, 1.0, y.id, 1.0));
}
inline Var operator-(const Var& x, const Var& y) {
  return Var(*x.tape, x.tape->add_node(x.val() - y.val(), x.id, 1.0, y.id, -1.0));
}
inline Var operator*(const Var& x, const Var& y) {
  return Var(*x.tape, x.tape->add_node(x.val() * y.val(), x.id, y.val(), y.id, x.val()));
}
inline Var operator/(const Var& x, const Var& y) {
  double inv = 1.0 / y.val();
  return Var(*x.tape,
             x.tape->add_node(x.val() * inv, x.id, inv, y.id, -x.val() * inv * inv));
}
inline Var operator-(const Var& x) {
  return Var(*x.tape, x.tape->add_node(-x.val(), x.id, -1.0));
}
inline Var operator+(const Var& x, double c) {
  return Var(*x.tape, x.tape->add_node(x.val() + c, x.id, 1.0));
}
inline Var operator+(double c, const Var& x) { return x + c; }
inline Var operator-(const Var& x, double c) { return x + (-c); }
inline Var operator-(double c, const Var& x) {
  return Var(*x.tape, x.tape->add_node(c - x.val(), x.id, -1.0));
}
inline Var operator*(const Var& x, double c) {
  return Var(*x.tape, x.tape->add_node(x.val() * c, x.id, c));
}
inline Var operator*(double c, const Var& x) { return x * c; }
inline Var operator/(const Var& x, double c) { return x * (1.0 / c); }

inline Var tanh(const Var& x) {
  double t = std::tanh(x.val());
  return Var(*x.tape, x.tape->add_node(t, x.id, 1.0 - t * t));
}
inline Var exp(const Var& x) {
  double e = std::exp(x.val());
  return Var(*x.tape, x.tape->add_node(e, x.id, e));
}
inline Var log(const Var& x) {
  return Var(*x.tape, x.tape->add_node(std::log(x.val()), x.id, 1.0 / x.val()));
}
inline Var sin(const Var& x) {
  return Var(*x.tape, x.tape->add_node(std::sin(x.val()), x.id, std::cos(x.val())));
}
inline Var cos(const Var& x) {
  return Var(*x.tape, x.tape->add_node(std::cos(x.val()), x.id, -std::sin(x.val())));
}
inline Var relu(const Var& x) {
  double v = x.val();
  return Var(*x.tape, x.tape->add_node(v > 0 ? v : 0.0, x.id, v > 0 ? 1.0 : 0.0));
}
inline double val_of(const Var& x) { return x.val(); }
inline double val_of(double x) { return x; }

// Named flat parameter vector with its own learning rate (the quantum
// actor trains its encoding/variational/output groups at different rates).
struct ParamGroup {
  std::string name;
  std::vector<double> values;
  double learning_rate = 0.01;
};

enum class Activation { tanh, relu, identity };

inline double relu(double x) { return x > 0 ? x : 0.0; }

// activation(W x + b) with W stored row-major [n_out x n_in], then bias.
// Scalar-generic so the same code runs the fast rollout path (double) and
// the tape path (Var).
template <class S>
std::vector<S> dense_layer(const std::vector<S>& x, const S* weights, const S* bias, int n_in,
                           int n_out, Activation act) {
  using std::tanh;
  if (static_cast<int>(x.size()) != n_in) throw std::invalid_argument("dense_layer shape mismatch");
  std::vector<S> out;
  out.reserve(n_out);
  for (int o = 0; o < n_out; ++o) {
    S acc = bias[o];
    for (int i = 0; i < n_in; ++i) acc = acc + weights[o * n_in + i] * x[i];
    switch (act) {
      case Activation::tanh: acc = tanh(acc); break;
      case Activation::relu: acc = relu(acc); break;
      case Activation::identity: break;
    }
    out.push_back(acc);
  }
  return out;
}

// Masked softmax over finite logits. Masked entries come out exactly zero.
inline std::vector<double> masked_softmax(const std::vector<double>& logits,
                                          const std::vector<bool>& mask) {
  size_t n = logits.size();
  double hi = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (size_t i = 0; i < n; ++i)
    if (!mask[i]) {
      any = true;
      if (logits[i] > hi) hi = logits[i];
    }
  if (!any) throw std::invalid_argument("softmax: all entries masked");
  std::vector<double> p(n, 0.0);
  double z = 0.0;
  for (size_t i = 0; i < n; ++i)
    if (!mask[i]) {
      p[i] = std::exp(logits[i] - hi);
      z += p[i];
    }
  for (double& v : p) v /= z;
  return p;
}

inline std::vector<double> softmax(const std::vector<double>& logits) {
  return masked_softmax(logits, std::vector<bool>(logits.size(), false));
}

// log softmax(logits)[index] over the unmasked subset, on the tape.
inline Var masked_log_softmax_at(const std::vector<Var>& logits, const std::vector<bool>& mask,
                                 int index) {
  assert(!mask[index]);
  double hi = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < logits.size(); ++i)
    if (!mask[i]) hi = std::max(hi, logits[i].val());
  Var z;
  bool first = true;
  for (size_t i = 0; i < logits.size(); ++i) {
    if (mask[i]) continue;
    Var e = exp(logits[i] - hi);
    z = first ? e : z + e;
    first = false;
  }
  return logits[index] - hi - log(z);
}

inline int argmax_unmasked(const std::vector<double>& v, const std::vector<bool>& mask) {
  int best = -1;
  for (size_t i = 0; i < v.size(); ++i)
    if (!mask[i] && (best < 0 || v[i] > v[best])) best = static_cast<int>(i);
  if (best < 0) throw std::invalid_argument("argmax: all entries masked");
  return best;
}

// Sample an index from a categorical distribution via its CDF.
inline int sample_categorical(const std::vector<double>& probs, RngStream& rng) {
  double u = rng.next_double();
  double acc = 0.0;
  int last = -1;
  for (size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    last = static_cast<int>(i);
    acc += probs[i];
    if (u < acc) return last;
  }
  return last;  // u landed in the rounding tail
}

// Standard Adam with bias correction; one state per parameter group.
class Adam {
 public:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  void step(std::vector<ParamGroup>& groups, const std::vector<std::vector<double>>& grads) {
    if (m_.empty()) {
      for (const ParamGroup& g : groups) {
        m_.emplace_back(g.values.size(), 0.0);
        v_.emplace_back(g.values.size(), 0.0);
      }
    }
    ++t_;
    double c1 = 1.0 - std::pow(kBeta1, t_);
    double c2 = 1.0 - std::pow(kBeta2, t_);
    for (size_t gi = 0; gi < groups.size(); ++gi) {
      ParamGroup& g = groups[gi];
      for (size_t i = 0; i < g.values.size(); ++i) {
        double grad = grads[gi][i];
        if (std::isnan(grad)) throw std::runtime_error("NaN gradient in group " + g.name);
        m_[gi][i] = kBeta1 * m_[gi][i] + (1.0 - kBeta1) * grad;
        v_[gi][i] = kBeta2 * v_[gi][i] + (1.0 - kBeta2) * grad * grad;
        double mh = m_[gi][i] / c1, vh = v_[gi][i] / c2;
        g.values[i] -= g.learning_rate * mh / (std::sqrt(vh) + kEps);
      }
    }
  }

  int64_t step_count() const { return t_; }

 private:
  std::vector<std::vector<double>> m_, v_;
  int64_t t_ = 0;
};

inline double uniform_init_bound(int fan_in) { return 1.0 / std::sqrt(double(fan_in)); }

}  // namespace qcr
