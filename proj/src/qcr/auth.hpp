#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "harness.hpp"

namespace qcr {

// Four-phase challenge-response authentication on top of a trained
// verifier agent. Phase 1 is enrollment (domain agreement + training),
// phase 2 the classical factor, phases 3-4 the quantum challenges and the
// threshold decision.

struct AuthConfig {
  int session_bits = 32;
  double threshold = 0.8;
  int copies_per_challenge = 2;
};

struct VerifierProfile {
  Agent agent;
  AngularDomain domain;
  EnvConfig challenge_env;  // N = copies_per_challenge episodes on the enrolled domain
  uint64_t train_seed = 0;
};

// The classical factor is a salted-hash comparison stub; it only exists to
// enforce the phase ordering.
struct ClassicalFactor {
  std::string salt;
  size_t digest = 0;

  static ClassicalFactor enroll(const std::string& salt, const std::string& password) {
    return {salt, std::hash<std::string>{}(salt + password)};
  }
  bool check(const std::string& password) const {
    return std::hash<std::string>{}(salt + password) == digest;
  }
};

// Enrollment trains the verifier under the low penalty: the verifier owns
// the quantum hardware, so inference quality matters more than probe cost,
// and the low-penalty agent is the stronger inference model at N = 2.
inline VerifierProfile enroll(double domain_start, uint64_t seed, int epochs = 300,
                              double penalty = 0.05, int jobs = 1) {
  RunConfig rc = RunConfig::defaults(AgentType::S, penalty);
  rc.train_env.domain.start = domain_start;
  rc.eval_env = rc.train_env;
  rc.eval_env.n_copies = 2;
  rc.epochs = epochs;
  rc.jobs = jobs;
  TrainResult res = train(rc, seed);
  return {std::move(res.agent), AngularDomain{domain_start}, rc.eval_env, seed};
}

struct ChallengeRecord {
  int b = 0;
  int b_hat = 0;
  int steps = 0;
};

struct SessionResult {
  bool classical_ok = false;
  bool accepted = false;
  double correct_fraction = 0.0;
  std::vector<ChallengeRecord> transcript;
};

// Runs one session: classical factor first (failure short-circuits before
// any quantum state is prepared), then session_bits challenges of one
// N=2 episode each. Verification acts greedily; the verifier has no reason
// to randomize once trained.
inline SessionResult run_session(const VerifierProfile& profile, const AuthConfig& cfg,
                                 const ClassicalFactor& factor, const std::string& password,
                                 RngStream session_rng,
                                 const EnvConfig* challenge_env_override = nullptr) {
  SessionResult res;
  res.classical_ok = factor.check(password);
  if (!res.classical_ok) return res;

  EnvConfig env = challenge_env_override ? *challenge_env_override : profile.challenge_env;
  env.n_copies = cfg.copies_per_challenge;
  int correct = 0;
  for (int i = 0; i < cfg.session_bits; ++i) {
    EpisodeTrace tr = rollout(profile.agent, env, session_rng.derive({uint64_t(i)}), true);
    res.transcript.push_back({tr.true_bit, tr.guessed_bit, tr.probes() + 1});
    if (tr.correct()) ++correct;
  }
  res.correct_fraction = double(correct) / cfg.session_bits;
  res.accepted = res.correct_fraction >= cfg.threshold;
  return res;
}

struct EveResult {
  double per_bit_accuracy = 0.0;
  double acceptance_rate = 0.0;
  long bits = 0;
  long sessions = 0;
};

// Mismatched-domain adversary: Eve trains her own agent on a shifted
// domain, then answers challenges whose secret angles come from the true
// domain while she probes with her own apparatus.
inline EveResult eve_attack(double true_start, double eve_start, int n_bits, int n_sessions,
                            const AuthConfig& cfg, uint64_t seed, int epochs = 300,
                            int jobs = 1) {
  VerifierProfile eve = enroll(eve_start, seed, epochs, 0.05, jobs);
  EnvConfig env = eve.challenge_env;
  env.domain.start = true_start;   // challenges come from the real domain
  env.probe_start = eve_start;     // Eve measures with her own angles

  RngStream master(seed);
  EveResult res;
  res.bits = n_bits;
  res.sessions = n_sessions;
  long correct = 0;
  for (int i = 0; i < n_bits; ++i) {
    EpisodeTrace tr = rollout(eve.agent, env, master.derive({10, uint64_t(i)}), true);
    if (tr.correct()) ++correct;
  }
  res.per_bit_accuracy = double(correct) / n_bits;

  long accepted = 0;
  for (int s = 0; s < n_sessions; ++s) {
    int ok = 0;
    for (int i = 0; i < cfg.session_bits; ++i) {
      EpisodeTrace tr =
          rollout(eve.agent, env, master.derive({11, uint64_t(s), uint64_t(i)}), true);
      if (tr.correct()) ++ok;
    }
    if (double(ok) / cfg.session_bits >= cfg.threshold) ++accepted;
  }
  res.acceptance_rate = double(accepted) / n_sessions;
  return res;
}

// Exact tail P[Bin(n, p) >= ceil(tau * n)], the oracle for acceptance
// rates given a measured per-bit accuracy.
inline double binomial_acceptance_probability(int n, double p, double tau) {
  int k_min = static_cast<int>(std::ceil(tau * n - 1e-12));
  if (p <= 0.0) return k_min <= 0 ? 1.0 : 0.0;
  if (p >= 1.0) return 1.0;
  double prob = 0.0;
  double logp = std::log(p), log1p = std::log1p(-p);
  for (int k = k_min; k <= n; ++k) {
    double logc = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
    prob += std::exp(logc + k * logp + (n - k) * log1p);
  }
  return prob;
}

inline json transcript_to_json(const SessionResult& res, const AuthConfig& cfg) {
  json per = json::array();
  for (const ChallengeRecord& c : res.transcript)
    per.push_back({{"b", c.b}, {"b_hat", c.b_hat}, {"steps", c.steps}});
  return json{{"domain_start", "redacted"},
              {"n_challenges", cfg.session_bits},
              {"per_challenge", per},
              {"correct_fraction", res.correct_fraction},
              {"threshold", cfg.threshold},
              {"decision", res.accepted ? "accept" : "reject"}};
}

}  // namespace qcr
