#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "diffnet.hpp"
#include "env.hpp"
#include "pqc.hpp"

namespace qcr {

enum class AgentType { C, D, S };

inline std::string agent_type_name(AgentType t) {
  switch (t) {
    case AgentType::C: return "C";
    case AgentType::D: return "D";
    case AgentType::S: return "S";
  }
  return "?";
}

inline AgentType agent_type_from(const std::string& s) {
  if (s == "C" || s == "c") return AgentType::C;
  if (s == "D" || s == "d") return AgentType::D;
  if (s == "S" || s == "s") return AgentType::S;
  throw std::invalid_argument("unknown agent type: " + s);
}

constexpr int kHiddenPolicy = 128;
constexpr int kHiddenCritic = 64;
constexpr int kObsDim = 4;

// The shallow circuit sees observations scaled by pi before encoding.
// With raw values the feature cos(o_i + theta_i) spans less than a third
// of its range over p1_hat in [0, 1], which starves the guess head and the
// high-penalty run degenerates to immediate termination on most seeds.
#ifndef QCR_SHALLOW_INPUT_SCALE
#define QCR_SHALLOW_INPUT_SCALE kPi
#endif
constexpr double kShallowInputScale = QCR_SHALLOW_INPUT_SCALE;

// Initial bias nudge on the two terminate logits. Starting with cheap
// episodes keeps early batches informative about both guesses instead of
// spending the whole budget probing before the first parameter update.
// The depth of the nudge trades early probe exploration against the speed
// at which the guess head separates; -4 measurably improves the odds of
// escaping the single-angle trap under the high penalty.
constexpr double kTerminateBiasInit = -4.0;

constexpr double kQuantumInitRange = 0.1;

struct EpisodeTrace {
  std::vector<StepRecord> steps;
  int true_bit = 0;
  int guessed_bit = 0;

  int probes() const { return static_cast<int>(steps.size()) - 1; }
  bool correct() const { return true_bit == guessed_bit; }
  double total_return() const { return episode_return(steps); }
};

class Agent {
 public:
  Agent(AgentType type, int K, RngStream init_rng) : type_(type), K_(K) {
    int n_act = K + 2;
    switch (type) {
      case AgentType::C:
        groups_.push_back(make_dense_group("classical_policy", 0.01, init_rng, n_act, true));
        break;
      case AgentType::S: {
        ParamGroup var{"variational", {}, 0.01};
        for (int i = 0; i < 4; ++i)
          var.values.push_back(init_rng.uniform(-kQuantumInitRange, kQuantumInitRange));
        groups_.push_back(var);
        groups_.push_back(make_dense_group("classical_policy", 0.01, init_rng, n_act, true));
        break;
      }
      case AgentType::D: {
        if (n_act > 10) throw std::invalid_argument("D-agent supports at most 8 probe angles");
        shape_ = DeepActorShape{4, n_act};
        ParamGroup enc{"encoding", {}, 0.01};
        for (int i = 0; i < shape_.encoding_count(); ++i)
          enc.values.push_back(init_rng.uniform(-kQuantumInitRange, kQuantumInitRange));
        ParamGroup var{"variational", {}, 0.01};
        for (int i = 0; i < shape_.variational_count(); ++i)
          var.values.push_back(init_rng.uniform(-kQuantumInitRange, kQuantumInitRange));
        ParamGroup out{"output", std::vector<double>(n_act, 0.0), 0.005};
        groups_.push_back(enc);
        groups_.push_back(var);
        groups_.push_back(out);
        groups_.push_back(make_critic_group(init_rng));
        break;
      }
    }
  }

  AgentType type() const { return type_; }
  int n_angles() const { return K_; }
  int n_actions() const { return K_ + 2; }

  std::vector<ParamGroup>& groups() { return groups_; }
  const std::vector<ParamGroup>& groups() const { return groups_; }

  ParamGroup& group(const std::string& name) {
    for (ParamGroup& g : groups_)
      if (g.name == name) return g;
    throw std::invalid_argument("no parameter group named " + name);
  }
  const ParamGroup& group(const std::string& name) const {
    return const_cast<Agent*>(this)->group(name);
  }

  std::vector<double> logits(const std::vector<double>& obs) const {
    switch (type_) {
      case AgentType::C:
        return mlp_logits<double>(group("classical_policy").values.data(), obs);
      case AgentType::S: {
        std::vector<double> scaled = obs;
        for (double& v : scaled) v *= kShallowInputScale;
        std::vector<double> feat =
            shallow_features<double>(group("variational").values.data(), scaled);
        return mlp_logits<double>(group("classical_policy").values.data(), feat);
      }
      case AgentType::D:
        return deep_actor_logits<double>(shape_, group("encoding").values.data(),
                                         group("variational").values.data(),
                                         group("output").values.data(), obs, 1.0, 0.0);
    }
    throw std::logic_error("unreachable");
  }

  std::vector<Var> logits_on_tape(Tape& tape, const std::vector<std::vector<Var>>& pvars,
                                  const std::vector<double>& obs) const {
    std::vector<Var> ovars;
    for (double v : obs) ovars.push_back(leaf(tape, v));
    switch (type_) {
      case AgentType::C:
        return mlp_logits<Var>(pvars[0].data(), ovars);
      case AgentType::S: {
        for (Var& v : ovars) v = v * kShallowInputScale;
        std::vector<Var> feat = shallow_features<Var>(pvars[0].data(), ovars);
        return mlp_logits<Var>(pvars[1].data(), feat);
      }
      case AgentType::D:
        return deep_actor_logits<Var>(shape_, pvars[0].data(), pvars[1].data(), pvars[2].data(),
                                      ovars, leaf(tape, 1.0), leaf(tape, 0.0));
    }
    throw std::logic_error("unreachable");
  }

  double critic_value(const std::vector<double>& obs) const {
    return critic_forward<double>(group("critic").values.data(), obs)[0];
  }

  Var critic_value_on_tape(Tape& tape, const std::vector<Var>& cvars,
                           const std::vector<double>& obs) const {
    std::vector<Var> ovars;
    for (double v : obs) ovars.push_back(leaf(tape, v));
    return critic_forward<Var>(cvars.data(), ovars)[0];
  }

  struct ActResult {
    Action action;
    double log_prob = 0.0;
  };

  ActResult act(const std::vector<double>& obs, const std::vector<bool>& mask, RngStream& rng,
                bool greedy = false) const {
    std::vector<double> lg = logits(obs);
    std::vector<double> probs = masked_softmax(lg, mask);
    int a = greedy ? argmax_unmasked(probs, mask) : sample_categorical(probs, rng);
    return {Action{a}, std::log(probs[a])};
  }

  const DeepActorShape& shape() const { return shape_; }

 private:
  static ParamGroup make_dense_group(const std::string& name, double lr, RngStream& rng,
                                     int n_out, bool terminate_bias) {
    // Layout: W1[128x4], b1[128], W2[n_out x 128], b2[n_out].
    ParamGroup g{name, {}, lr};
    double b1 = uniform_init_bound(kObsDim);
    for (int i = 0; i < kHiddenPolicy * kObsDim; ++i) g.values.push_back(rng.uniform(-b1, b1));
    for (int i = 0; i < kHiddenPolicy; ++i) g.values.push_back(rng.uniform(-b1, b1));
    double b2 = uniform_init_bound(kHiddenPolicy);
    for (int i = 0; i < n_out * kHiddenPolicy; ++i) g.values.push_back(rng.uniform(-b2, b2));
    for (int i = 0; i < n_out; ++i) {
      double bias = rng.uniform(-b2, b2);
      if (terminate_bias && i >= n_out - 2) bias += kTerminateBiasInit;
      g.values.push_back(bias);
    }
    return g;
  }

  static ParamGroup make_critic_group(RngStream& rng) {
    ParamGroup g{"critic", {}, 0.001};
    double b1 = uniform_init_bound(kObsDim);
    for (int i = 0; i < kHiddenCritic * kObsDim; ++i) g.values.push_back(rng.uniform(-b1, b1));
    for (int i = 0; i < kHiddenCritic; ++i) g.values.push_back(rng.uniform(-b1, b1));
    double b2 = uniform_init_bound(kHiddenCritic);
    for (int i = 0; i < kHiddenCritic; ++i) g.values.push_back(rng.uniform(-b2, b2));
    g.values.push_back(rng.uniform(-b2, b2));
    return g;
  }

  template <class SS>
  std::vector<SS> mlp_logits(const SS* p, const std::vector<SS>& x) const {
    int n_act = K_ + 2;
    const SS* w1 = p;
    const SS* bias1 = p + kHiddenPolicy * kObsDim;
    const SS* w2 = bias1 + kHiddenPolicy;
    const SS* bias2 = w2 + n_act * kHiddenPolicy;
    std::vector<SS> h = dense_layer<SS>(x, w1, bias1, kObsDim, kHiddenPolicy, Activation::tanh);
    return dense_layer<SS>(h, w2, bias2, kHiddenPolicy, n_act, Activation::identity);
  }

  template <class SS>
  std::vector<SS> critic_forward(const SS* p, const std::vector<SS>& x) const {
    const SS* w1 = p;
    const SS* bias1 = p + kHiddenCritic * kObsDim;
    const SS* w2 = bias1 + kHiddenCritic;
    const SS* bias2 = w2 + kHiddenCritic;
    std::vector<SS> h = dense_layer<SS>(x, w1, bias1, kObsDim, kHiddenCritic, Activation::tanh);
    return dense_layer<SS>(h, w2, bias2, kHiddenCritic, 1, Activation::identity);
  }

  AgentType type_;
  int K_;
  DeepActorShape shape_;
  std::vector<ParamGroup> groups_;
};

// Runs one episode to termination. The environment and the policy draw
// from sibling streams derived from the per-episode stream.
inline EpisodeTrace rollout(const Agent& agent, const EnvConfig& cfg, RngStream episode_rng,
                            bool greedy = false) {
  Env env(cfg, episode_rng.derive({0}));
  RngStream pol_rng = episode_rng.derive({1});
  Observation obs = env.reset();
  EpisodeTrace trace;
  trace.true_bit = env.state().j;
  while (true) {
    std::vector<bool> mask = env.action_mask();
    Agent::ActResult act = agent.act(obs.as_vector(), mask, pol_rng, greedy);
    Env::StepResult sr = env.step(act.action);
    trace.steps.push_back({obs, mask, act.action.index, sr.reward});
    if (sr.done) {
      trace.guessed_bit = act.action.guess(cfg.n_angles);
      break;
    }
    obs = sr.observation;
  }
  return trace;
}

struct UpdateResult {
  double actor_loss = 0.0;
  double critic_loss = 0.0;
};

struct LossAndGrads {
  UpdateResult losses;
  std::vector<std::vector<double>> grads;  // aligned with agent.groups()
};

// REINFORCE with gamma = 1 returns-to-go, variance-normalized across all
// timesteps of the batch. Normalizing per-episode instead would subtract a
// constant within each episode and cancel the terminal-reward signal.
inline LossAndGrads reinforce_grads(const Agent& agent, const std::vector<EpisodeTrace>& batch) {
  double mean = 0.0, sq = 0.0;
  size_t count = 0;
  std::vector<std::vector<double>> returns;
  for (const EpisodeTrace& tr : batch) {
    std::vector<double> g(tr.steps.size());
    double acc = 0.0;
    for (int t = static_cast<int>(tr.steps.size()) - 1; t >= 0; --t) {
      acc += tr.steps[t].reward;
      g[t] = acc;
    }
    for (double v : g) {
      mean += v;
      sq += v * v;
      ++count;
    }
    returns.push_back(std::move(g));
  }
  mean /= count;
  double sd = std::sqrt(std::max(0.0, sq / count - mean * mean));

  Tape tape;
  std::vector<std::vector<Var>> pvars;
  for (const ParamGroup& g : agent.groups()) {
    if (g.name == "critic") continue;
    std::vector<Var> vs;
    vs.reserve(g.values.size());
    for (double v : g.values) vs.push_back(leaf(tape, v));
    pvars.push_back(std::move(vs));
  }

  Var loss = leaf(tape, 0.0);
  for (size_t e = 0; e < batch.size(); ++e) {
    const EpisodeTrace& tr = batch[e];
    for (size_t t = 0; t < tr.steps.size(); ++t) {
      double ghat = (returns[e][t] - mean) / (sd + 1e-8);
      const StepRecord& st = tr.steps[t];
      std::vector<Var> lg = agent.logits_on_tape(tape, pvars, st.observation.as_vector());
      Var logp = masked_log_softmax_at(lg, st.mask, st.action);
      loss = loss - logp * ghat;
    }
  }
  loss = loss / double(batch.size());
  if (std::isnan(loss.val())) throw std::runtime_error("NaN REINFORCE loss");
  tape.backward(loss.id);

  LossAndGrads out;
  out.losses = {loss.val(), 0.0};
  size_t gi = 0;
  for (const ParamGroup& g : agent.groups()) {
    if (g.name == "critic") continue;
    std::vector<double> gr;
    gr.reserve(g.values.size());
    for (const Var& v : pvars[gi]) gr.push_back(v.grad());
    out.grads.push_back(std::move(gr));
    ++gi;
  }
  return out;
}

inline UpdateResult reinforce_update(Agent& agent, const std::vector<EpisodeTrace>& batch,
                                     Adam& opt) {
  LossAndGrads lg = reinforce_grads(agent, batch);
  opt.step(agent.groups(), lg.grads);
  return lg.losses;
}

// One-step actor-critic: y_t = r_t + V(o_{t+1}) (terminal: y_T = r_T),
// advantage detached in the actor loss, critic regresses to y_t.
inline LossAndGrads actor_critic_grads(const Agent& agent,
                                       const std::vector<EpisodeTrace>& batch) {
  Tape tape;
  std::vector<std::vector<Var>> pvars;
  std::vector<Var> cvars;
  for (const ParamGroup& g : agent.groups()) {
    std::vector<Var> vs;
    vs.reserve(g.values.size());
    for (double v : g.values) vs.push_back(leaf(tape, v));
    if (g.name == "critic")
      cvars = std::move(vs);
    else
      pvars.push_back(std::move(vs));
  }

  Var actor_loss = leaf(tape, 0.0);
  Var critic_loss = leaf(tape, 0.0);
  for (const EpisodeTrace& tr : batch) {
    size_t T = tr.steps.size();
    for (size_t t = 0; t < T; ++t) {
      const StepRecord& st = tr.steps[t];
      std::vector<double> o = st.observation.as_vector();
      double y = st.reward;
      if (t + 1 < T) y += agent.critic_value(tr.steps[t + 1].observation.as_vector());
      double adv = y - agent.critic_value(o);
      std::vector<Var> lg = agent.logits_on_tape(tape, pvars, o);
      Var logp = masked_log_softmax_at(lg, st.mask, st.action);
      actor_loss = actor_loss - logp * adv;
      Var delta = leaf(tape, y) - agent.critic_value_on_tape(tape, cvars, o);
      critic_loss = critic_loss + 0.5 * delta * delta;
    }
  }
  actor_loss = actor_loss / double(batch.size());
  critic_loss = critic_loss / double(batch.size());
  Var loss = actor_loss + critic_loss;
  if (std::isnan(loss.val())) throw std::runtime_error("NaN actor-critic loss");
  tape.backward(loss.id);

  LossAndGrads out;
  out.losses = {actor_loss.val(), critic_loss.val()};
  size_t gi = 0;
  for (const ParamGroup& g : agent.groups()) {
    const std::vector<Var>& vs = (g.name == "critic") ? cvars : pvars[gi];
    if (g.name != "critic") ++gi;
    std::vector<double> gr;
    gr.reserve(g.values.size());
    for (const Var& v : vs) gr.push_back(v.grad());
    out.grads.push_back(std::move(gr));
  }
  return out;
}

inline UpdateResult actor_critic_update(Agent& agent, const std::vector<EpisodeTrace>& batch,
                                        Adam& opt) {
  LossAndGrads lg = actor_critic_grads(agent, batch);
  opt.step(agent.groups(), lg.grads);
  return lg.losses;
}

}  // namespace qcr
