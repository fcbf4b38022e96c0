#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "rng.hpp"

namespace qcr {

using cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;

constexpr int kMaxQubits = 6;

// Dense statevector over up to kMaxQubits qubits. Qubit q addresses bit
// (1 << q) of the basis index.
struct StateVector {
  int n_qubits = 1;
  std::vector<cplx> amp;

  static StateVector zero(int n) {
    if (n < 1 || n > kMaxQubits) throw std::invalid_argument("qubit count out of range");
    StateVector s;
    s.n_qubits = n;
    s.amp.assign(size_t{1} << n, cplx{0.0, 0.0});
    s.amp[0] = 1.0;
    return s;
  }

  size_t dim() const { return amp.size(); }

  double norm_sq() const {
    double t = 0.0;
    for (const cplx& a : amp) t += std::norm(a);
    return t;
  }
};

struct DensityMatrix {
  int n_qubits = 1;
  std::vector<cplx> m;  // row-major, dim x dim

  static DensityMatrix from_pure(const StateVector& s) {
    DensityMatrix rho;
    rho.n_qubits = s.n_qubits;
    size_t d = s.dim();
    rho.m.assign(d * d, cplx{0.0, 0.0});
    for (size_t i = 0; i < d; ++i)
      for (size_t j = 0; j < d; ++j) rho.m[i * d + j] = s.amp[i] * std::conj(s.amp[j]);
    return rho;
  }

  size_t dim() const { return size_t{1} << n_qubits; }

  cplx& at(size_t i, size_t j) { return m[i * dim() + j]; }
  const cplx& at(size_t i, size_t j) const { return m[i * dim() + j]; }

  double trace_real() const {
    double t = 0.0;
    for (size_t i = 0; i < dim(); ++i) t += at(i, i).real();
    return t;
  }
};

using Gate2 = std::array<cplx, 4>;  // row-major 2x2

inline Gate2 gate_h() {
  double s = 1.0 / std::sqrt(2.0);
  return {cplx{s, 0}, cplx{s, 0}, cplx{s, 0}, cplx{-s, 0}};
}

inline Gate2 gate_x() { return {cplx{0, 0}, cplx{1, 0}, cplx{1, 0}, cplx{0, 0}}; }

inline Gate2 gate_phase(double phi) {
  return {cplx{1, 0}, cplx{0, 0}, cplx{0, 0}, std::polar(1.0, phi)};
}

inline Gate2 gate_ry(double theta) {
  double c = std::cos(theta / 2), s = std::sin(theta / 2);
  return {cplx{c, 0}, cplx{-s, 0}, cplx{s, 0}, cplx{c, 0}};
}

inline Gate2 gate_rz(double theta) {
  return {std::polar(1.0, -theta / 2), cplx{0, 0}, cplx{0, 0}, std::polar(1.0, theta / 2)};
}

inline void check_qubit(int n_qubits, int q) {
  if (q < 0 || q >= n_qubits) throw std::out_of_range("qubit index out of range");
}

inline void apply_gate(StateVector& s, const Gate2& g, int q) {
  check_qubit(s.n_qubits, q);
  size_t stride = size_t{1} << q;
  for (size_t base = 0; base < s.dim(); base += 2 * stride)
    for (size_t i = base; i < base + stride; ++i) {
      cplx a0 = s.amp[i], a1 = s.amp[i + stride];
      s.amp[i] = g[0] * a0 + g[1] * a1;
      s.amp[i + stride] = g[2] * a0 + g[3] * a1;
    }
}

inline void apply_cz(StateVector& s, int q1, int q2) {
  check_qubit(s.n_qubits, q1);
  check_qubit(s.n_qubits, q2);
  if (q1 == q2) throw std::invalid_argument("CZ requires distinct qubits");
  size_t m1 = size_t{1} << q1, m2 = size_t{1} << q2;
  for (size_t i = 0; i < s.dim(); ++i)
    if ((i & m1) && (i & m2)) s.amp[i] = -s.amp[i];
}

// rho -> U rho U^dagger for a single-qubit unitary on qubit q.
inline void apply_gate(DensityMatrix& rho, const Gate2& g, int q) {
  check_qubit(rho.n_qubits, q);
  size_t d = rho.dim(), stride = size_t{1} << q;
  // left-multiply by U (acts on row index)
  for (size_t col = 0; col < d; ++col)
    for (size_t base = 0; base < d; base += 2 * stride)
      for (size_t i = base; i < base + stride; ++i) {
        cplx a0 = rho.m[i * d + col], a1 = rho.m[(i + stride) * d + col];
        rho.m[i * d + col] = g[0] * a0 + g[1] * a1;
        rho.m[(i + stride) * d + col] = g[2] * a0 + g[3] * a1;
      }
  // right-multiply by U^dagger (acts on column index)
  for (size_t row = 0; row < d; ++row)
    for (size_t base = 0; base < d; base += 2 * stride)
      for (size_t j = base; j < base + stride; ++j) {
        cplx a0 = rho.m[row * d + j], a1 = rho.m[row * d + j + stride];
        rho.m[row * d + j] = a0 * std::conj(g[0]) + a1 * std::conj(g[1]);
        rho.m[row * d + j + stride] = a0 * std::conj(g[2]) + a1 * std::conj(g[3]);
      }
}

inline void apply_cz(DensityMatrix& rho, int q1, int q2) {
  check_qubit(rho.n_qubits, q1);
  check_qubit(rho.n_qubits, q2);
  if (q1 == q2) throw std::invalid_argument("CZ requires distinct qubits");
  size_t d = rho.dim(), m1 = size_t{1} << q1, m2 = size_t{1} << q2;
  auto flagged = [&](size_t i) { return (i & m1) && (i & m2); };
  for (size_t i = 0; i < d; ++i)
    for (size_t j = 0; j < d; ++j)
      if (flagged(i) != flagged(j)) rho.m[i * d + j] = -rho.m[i * d + j];
}

enum class ChannelLabel { bit_flip, depolarizing, amplitude_damping };

inline std::string channel_name(ChannelLabel l) {
  switch (l) {
    case ChannelLabel::bit_flip: return "bitflip";
    case ChannelLabel::depolarizing: return "depolarizing";
    case ChannelLabel::amplitude_damping: return "amplitude";
  }
  return "?";
}

struct KrausChannel {
  ChannelLabel label;
  double p = 0.0;
  std::vector<Gate2> operators;
};

inline KrausChannel make_channel(ChannelLabel label, double p) {
  if (p < 0.0 || p > 1.0) throw std::domain_error("channel probability outside [0,1]");
  KrausChannel ch{label, p, {}};
  auto scaled = [](const Gate2& g, double f) {
    Gate2 r = g;
    for (cplx& c : r) c *= f;
    return r;
  };
  Gate2 id{cplx{1, 0}, cplx{0, 0}, cplx{0, 0}, cplx{1, 0}};
  Gate2 px = gate_x();
  Gate2 py{cplx{0, 0}, cplx{0, -1}, cplx{0, 1}, cplx{0, 0}};
  Gate2 pz{cplx{1, 0}, cplx{0, 0}, cplx{0, 0}, cplx{-1, 0}};
  switch (label) {
    case ChannelLabel::bit_flip:
      ch.operators = {scaled(id, std::sqrt(1.0 - p)), scaled(px, std::sqrt(p))};
      break;
    case ChannelLabel::depolarizing:
      // rho -> (1-p) rho + p I/2
      ch.operators = {scaled(id, std::sqrt(1.0 - 3.0 * p / 4.0)), scaled(px, std::sqrt(p / 4.0)),
                      scaled(py, std::sqrt(p / 4.0)), scaled(pz, std::sqrt(p / 4.0))};
      break;
    case ChannelLabel::amplitude_damping:
      ch.operators = {Gate2{cplx{1, 0}, cplx{0, 0}, cplx{0, 0}, cplx{std::sqrt(1.0 - p), 0}},
                      Gate2{cplx{0, 0}, cplx{std::sqrt(p), 0}, cplx{0, 0}, cplx{0, 0}}};
      break;
  }
  return ch;
}

inline DensityMatrix apply_channel(const DensityMatrix& rho, const KrausChannel& ch, int q) {
  check_qubit(rho.n_qubits, q);
  DensityMatrix out;
  out.n_qubits = rho.n_qubits;
  out.m.assign(rho.m.size(), cplx{0, 0});
  for (const Gate2& k : ch.operators) {
    DensityMatrix term = rho;
    apply_gate(term, k, q);  // works for arbitrary 2x2, not just unitaries
    for (size_t i = 0; i < out.m.size(); ++i) out.m[i] += term.m[i];
  }
  return out;
}

inline double measure_probability_one(const StateVector& s, int q) {
  check_qubit(s.n_qubits, q);
  size_t mask = size_t{1} << q;
  double p = 0.0;
  for (size_t i = 0; i < s.dim(); ++i)
    if (i & mask) p += std::norm(s.amp[i]);
  return p;
}

inline double measure_probability_one(const DensityMatrix& rho, int q) {
  check_qubit(rho.n_qubits, q);
  size_t mask = size_t{1} << q;
  double p = 0.0;
  for (size_t i = 0; i < rho.dim(); ++i)
    if (i & mask) p += rho.at(i, i).real();
  return p;
}

inline std::vector<int> sample_outcomes(double p1, int shots, RngStream& rng) {
  if (p1 < 0.0 || p1 > 1.0) throw std::domain_error("probability outside [0,1]");
  if (shots < 1) throw std::invalid_argument("shots must be >= 1");
  std::vector<int> out(shots);
  for (int i = 0; i < shots; ++i) out[i] = rng.bernoulli(p1) ? 1 : 0;
  return out;
}

inline double expectation_z(const StateVector& s, int q) {
  return 1.0 - 2.0 * measure_probability_one(s, q);
}

inline double expectation_zz(const StateVector& s, int q1, int q2) {
  check_qubit(s.n_qubits, q1);
  check_qubit(s.n_qubits, q2);
  size_t m1 = size_t{1} << q1, m2 = size_t{1} << q2;
  double e = 0.0;
  for (size_t i = 0; i < s.dim(); ++i) {
    double sign = (((i & m1) != 0) == ((i & m2) != 0)) ? 1.0 : -1.0;
    e += sign * std::norm(s.amp[i]);
  }
  return e;
}

// Challenge pipeline of the protocol: Alice prepares |j>, H, Phase(phi1);
// Bob applies Phase(-phi2), H and measures. The sign on Bob's phase makes
// the outcome depend on |phi1 - phi2|; with +phi2 it would depend on the
// sum instead.
struct NoiseSpec {
  ChannelLabel label = ChannelLabel::bit_flip;
  double p = 0.0;
  bool at_transmission = false;  // false: pre-measurement insertion
  bool enabled = false;
};

inline double challenge_p1(int j, double phi1, double phi2, const NoiseSpec& noise = {}) {
  StateVector s = StateVector::zero(1);
  if (j) apply_gate(s, gate_x(), 0);
  apply_gate(s, gate_h(), 0);
  apply_gate(s, gate_phase(phi1), 0);
  if (!noise.enabled) {
    apply_gate(s, gate_phase(-phi2), 0);
    apply_gate(s, gate_h(), 0);
    return measure_probability_one(s, 0);
  }
  DensityMatrix rho = DensityMatrix::from_pure(s);
  KrausChannel ch = make_channel(noise.label, noise.p);
  if (noise.at_transmission) rho = apply_channel(rho, ch, 0);
  apply_gate(rho, gate_phase(-phi2), 0);
  apply_gate(rho, gate_h(), 0);
  if (!noise.at_transmission) rho = apply_channel(rho, ch, 0);
  return measure_probability_one(rho, 0);
}

// Closed form used as the analytic oracle in tests.
inline double challenge_p1_closed_form(int j, double phi1, double phi2) {
  double c = std::cos(std::fabs(phi1 - phi2));
  return j ? (1.0 + c) / 2.0 : (1.0 - c) / 2.0;
}

}  // namespace qcr
