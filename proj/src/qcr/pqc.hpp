#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "diffnet.hpp"
#include "qsim.hpp"

namespace qcr {

// Differentiable circuit simulation. The quantum state is held as pairs of
// real scalars per amplitude so the diffnet tape can run straight through
// the complex arithmetic; with S = double this doubles as the fast
// evaluation path used during rollouts.
template <class S>
struct CxS {
  S re, im;
};

template <class S>
using State4 = std::array<CxS<S>, 16>;  // 4 qubits, qubit q addresses bit (1 << q)

template <class S>
void pqc_apply_ry(State4<S>& st, const S& angle, int q) {
  using std::cos;
  using std::sin;
  S c = cos(angle * 0.5), s = sin(angle * 0.5);
  int stride = 1 << q;
  for (int base = 0; base < 16; base += 2 * stride)
    for (int i = base; i < base + stride; ++i) {
      CxS<S> a0 = st[i], a1 = st[i + stride];
      st[i] = {c * a0.re - s * a1.re, c * a0.im - s * a1.im};
      st[i + stride] = {s * a0.re + c * a1.re, s * a0.im + c * a1.im};
    }
}

template <class S>
void pqc_apply_rz(State4<S>& st, const S& angle, int q) {
  using std::cos;
  using std::sin;
  S c = cos(angle * 0.5), s = sin(angle * 0.5);
  int stride = 1 << q;
  for (int i = 0; i < 16; ++i) {
    CxS<S>& a = st[i];
    if (i & stride)
      a = {c * a.re - s * a.im, s * a.re + c * a.im};  // multiply by e^{+i angle/2}
    else
      a = {c * a.re + s * a.im, c * a.im - s * a.re};  // multiply by e^{-i angle/2}
  }
}

template <class S>
void pqc_apply_cz(State4<S>& st, int q1, int q2) {
  int m1 = 1 << q1, m2 = 1 << q2;
  for (int i = 0; i < 16; ++i)
    if ((i & m1) && (i & m2)) st[i] = {-1.0 * st[i].re, -1.0 * st[i].im};
}

template <class S>
State4<S> pqc_zero_state(const S& one, const S& zero) {
  State4<S> st;
  for (auto& a : st) a = {zero, zero};
  st[0] = {one, zero};
  return st;
}

// Observable menu shared by the deep actor: per-qubit Z then Z-pair
// parities. At most 10 observables are available on 4 qubits this way.
inline constexpr std::array<std::array<int, 2>, 10> kObservableMenu = {
    {{0, -1}, {1, -1}, {2, -1}, {3, -1}, {0, 1}, {1, 2}, {2, 3}, {0, 3}, {0, 2}, {1, 3}}};

template <class S>
std::vector<S> pqc_z_expectations(const State4<S>& st, int count) {
  std::vector<S> probs;
  probs.reserve(16);
  for (int i = 0; i < 16; ++i) probs.push_back(st[i].re * st[i].re + st[i].im * st[i].im);
  std::vector<S> evs;
  evs.reserve(count);
  for (int a = 0; a < count; ++a) {
    const auto& ob = kObservableMenu[a];
    S acc = probs[0];
    bool first = true;
    for (int i = 0; i < 16; ++i) {
      bool b1 = (i >> ob[0]) & 1;
      bool flag = ob[1] < 0 ? b1 : (b1 != bool((i >> ob[1]) & 1));
      S term = flag ? (-1.0 * probs[i]) : probs[i];
      if (first) {
        acc = term;
        first = false;
      } else {
        acc = acc + term;
      }
    }
    evs.push_back(acc);
  }
  return evs;
}

// Parameter layout for the depth-4 data-re-uploading actor.
// encoding lambda: [block][qubit][axis ry/rz] -> depth*4*2
// variational theta: same shape; output weights: one per action.
struct DeepActorShape {
  int depth = 4;
  int n_actions = 10;
  int encoding_count() const { return depth * 4 * 2; }
  int variational_count() const { return depth * 4 * 2; }
};

// logits_a = w_a * <O_a> after alternating encoding/variational blocks.
template <class S>
std::vector<S> deep_actor_logits(const DeepActorShape& shape, const S* lambda, const S* theta,
                                 const S* w, const std::vector<S>& obs, const S& one,
                                 const S& zero) {
  if (shape.n_actions > 10) throw std::invalid_argument("observable menu supports at most 10 actions");
  State4<S> st = pqc_zero_state<S>(one, zero);
  for (int l = 0; l < shape.depth; ++l) {
    for (int q = 0; q < 4; ++q) {
      int base = (l * 4 + q) * 2;
      pqc_apply_ry(st, lambda[base] * obs[q], q);
      pqc_apply_rz(st, lambda[base + 1] * obs[q], q);
    }
    for (int q = 0; q < 4; ++q) {
      int base = (l * 4 + q) * 2;
      pqc_apply_ry(st, theta[base], q);
      pqc_apply_rz(st, theta[base + 1], q);
    }
    pqc_apply_cz(st, 0, 1);
    pqc_apply_cz(st, 1, 2);
    pqc_apply_cz(st, 2, 3);
    pqc_apply_cz(st, 0, 3);
  }
  std::vector<S> evs = pqc_z_expectations(st, shape.n_actions);
  std::vector<S> logits;
  logits.reserve(shape.n_actions);
  for (int a = 0; a < shape.n_actions; ++a) logits.push_back(w[a] * evs[a]);
  return logits;
}

// Shallow S-agent circuit: Ry(o_i) encoding then Ry(theta_i), read out
// <Z_i>. No entangler, so the features separate per qubit.
template <class S>
std::vector<S> shallow_features(const S* theta, const std::vector<S>& obs) {
  using std::cos;
  std::vector<S> f;
  f.reserve(4);
  for (int q = 0; q < 4; ++q) f.push_back(cos(obs[q] + theta[q]));
  return f;
}

// Same circuit run through the full qsim statevector; used as the oracle
// for the closed-form feature path above.
inline std::vector<double> shallow_features_qsim(const double* theta,
                                                 const std::vector<double>& obs) {
  StateVector s = StateVector::zero(4);
  for (int q = 0; q < 4; ++q) {
    apply_gate(s, gate_ry(obs[q]), q);
    apply_gate(s, gate_ry(theta[q]), q);
  }
  std::vector<double> f;
  for (int q = 0; q < 4; ++q) f.push_back(expectation_z(s, q));
  return f;
}

// Non-differentiable reference for the deep actor via qsim, used in tests.
inline std::vector<double> deep_actor_logits_qsim(const DeepActorShape& shape,
                                                  const double* lambda, const double* theta,
                                                  const double* w,
                                                  const std::vector<double>& obs) {
  StateVector s = StateVector::zero(4);
  for (int l = 0; l < shape.depth; ++l) {
    for (int q = 0; q < 4; ++q) {
      int base = (l * 4 + q) * 2;
      apply_gate(s, gate_ry(lambda[base] * obs[q]), q);
      apply_gate(s, gate_rz(lambda[base + 1] * obs[q]), q);
    }
    for (int q = 0; q < 4; ++q) {
      int base = (l * 4 + q) * 2;
      apply_gate(s, gate_ry(theta[base]), q);
      apply_gate(s, gate_rz(theta[base + 1]), q);
    }
    apply_cz(s, 0, 1);
    apply_cz(s, 1, 2);
    apply_cz(s, 2, 3);
    apply_cz(s, 0, 3);
  }
  std::vector<double> logits;
  for (int a = 0; a < shape.n_actions; ++a) {
    const auto& ob = kObservableMenu[a];
    double ev = ob[1] < 0 ? expectation_z(s, ob[0]) : expectation_zz(s, ob[0], ob[1]);
    logits.push_back(w[a] * ev);
  }
  return logits;
}

}  // namespace qcr
