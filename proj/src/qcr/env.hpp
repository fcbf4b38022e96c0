#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "qsim.hpp"
#include "rng.hpp"

namespace qcr {


struct AngularDomain {
  double start = 0.0;  // width is fixed at pi
};

struct EnvConfig {
  int n_copies = 10;   // N
  double penalty = 0.5;  // X
  int shots = 4;
  int n_angles = 8;  // K
  AngularDomain domain;              // challenge domain (phi1)
  std::optional<double> probe_start; // probe-angle domain start; defaults to domain.start.
                                     // Only differs for the mismatched-domain adversary,
                                     // whose measurement apparatus is her own.
  NoiseSpec noise;

  int n_actions() const { return n_angles + 2; }
  double probe_domain_start() const { return probe_start.value_or(domain.start); }

  void validate() const {
    if (n_copies < 1 || penalty < 0.0 || shots < 1 || n_angles < 2)
      throw std::invalid_argument("invalid environment configuration");
  }
};

// [sin phi2, cos phi2, P_t(1), t/N]; before the first probe a neutral
// sentinel is returned.
struct Observation {
  double sin_phi2 = 0.0;
  double cos_phi2 = 0.0;
  double p1_hat = 0.5;
  double progress = 0.0;

  std::vector<double> as_vector() const { return {sin_phi2, cos_phi2, p1_hat, progress}; }
};

// Action indices: [0, K) probe with angle index k; K terminates with guess 0;
// K+1 terminates with guess 1.
struct Action {
  int index = 0;

  bool is_probe(int K) const { return index < K; }
  int guess(int K) const { return index - K; }
};

inline double probe_angle(const EnvConfig& cfg, int k) {
  if (k < 0 || k >= cfg.n_angles) throw std::out_of_range("probe index out of range");
  return cfg.probe_domain_start() + (k + 0.5) * kPi / cfg.n_angles;
}

inline double true_p1(int j, double phi1, double phi2) {
  return challenge_p1_closed_form(j, phi1, phi2);
}

struct StepRecord {
  Observation observation;  // observation the agent acted on
  std::vector<bool> mask;
  int action = 0;
  double reward = 0.0;
};

struct EpisodeState {
  int j = 0;
  double phi1 = 0.0;
  int copies_used = 0;
  bool done = false;
  Observation last_observation;
};

class Env {
 public:
  Env(const EnvConfig& cfg, RngStream rng) : cfg_(cfg), rng_(rng) { cfg_.validate(); }

  const EnvConfig& config() const { return cfg_; }
  const EpisodeState& state() const { return state_; }

  Observation reset() {
    state_ = EpisodeState{};
    state_.j = rng_.bernoulli_half() ? 1 : 0;
    state_.phi1 = rng_.uniform(cfg_.domain.start, cfg_.domain.start + kPi);
    state_.last_observation = Observation{};
    return state_.last_observation;
  }

  // Probe actions are masked out once the copy budget is exhausted.
  std::vector<bool> action_mask() const {
    std::vector<bool> mask(cfg_.n_actions(), false);
    if (state_.copies_used >= cfg_.n_copies)
      for (int k = 0; k < cfg_.n_angles; ++k) mask[k] = true;
    return mask;
  }

  struct StepResult {
    Observation observation;
    double reward = 0.0;
    bool done = false;
  };

  StepResult step(const Action& action) {
    if (state_.done) throw std::logic_error("step after episode end");
    int K = cfg_.n_angles;
    if (action.is_probe(K)) {
      if (state_.copies_used >= cfg_.n_copies)
        throw std::logic_error("probe with exhausted copy budget");
      double phi2 = probe_angle(cfg_, action.index);
      double p1 = challenge_p1(state_.j, state_.phi1, phi2, cfg_.noise);
      int ones = 0;
      for (int b : sample_outcomes(p1, cfg_.shots, rng_)) ones += b;
      ++state_.copies_used;
      Observation obs;
      obs.sin_phi2 = std::sin(phi2);
      obs.cos_phi2 = std::cos(phi2);
      obs.p1_hat = double(ones) / cfg_.shots;
      obs.progress = double(state_.copies_used) / cfg_.n_copies;
      state_.last_observation = obs;
      return {obs, -cfg_.penalty, false};
    }
    int guess = action.guess(K);
    if (guess != 0 && guess != 1) throw std::out_of_range("action index out of range");
    state_.done = true;
    double r = (guess == state_.j) ? 1.0 : -1.0;
    return {state_.last_observation, r, true};
  }

 private:
  EnvConfig cfg_;
  RngStream rng_;
  EpisodeState state_;
};

inline double episode_return(const std::vector<StepRecord>& trace) {
  if (trace.empty()) throw std::invalid_argument("empty trace");
  double total = 0.0;
  for (const StepRecord& s : trace) total += s.reward;
  return total;
}

}  // namespace qcr
