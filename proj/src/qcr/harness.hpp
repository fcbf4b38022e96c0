#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "agents.hpp"

namespace qcr {

using nlohmann::json;

struct RunConfig {
  AgentType agent_type = AgentType::S;
  EnvConfig train_env;
  EnvConfig eval_env;  // defaults to train_env with n_copies = 2
  int epochs = 300;
  int batch = 30;
  std::vector<uint64_t> seeds = {0, 1, 2};
  int eval_episodes = 1000;
  bool greedy_eval = false;
  int jobs = 1;
  std::string out_dir;

  static RunConfig defaults(AgentType type, double penalty) {
    RunConfig rc;
    rc.agent_type = type;
    rc.train_env = EnvConfig{};
    rc.train_env.penalty = penalty;
    rc.eval_env = rc.train_env;
    rc.eval_env.n_copies = 2;
    return rc;
  }

  void validate() const {
    if (epochs < 1 || batch < 1 || eval_episodes < 1 || seeds.empty() || jobs < 1)
      throw std::invalid_argument("invalid run configuration");
    train_env.validate();
    eval_env.validate();
  }
};

struct Metrics {
  double accuracy = 0.0;
  double avg_interactions = 0.0;  // probes plus the terminating action
  long confusion[2][2] = {{0, 0}, {0, 0}};  // [true bit][predicted bit]
  long episodes() const {
    return confusion[0][0] + confusion[0][1] + confusion[1][0] + confusion[1][1];
  }
};

struct EpochRow {
  int epoch = 0;
  double avg_steps = 0.0;
  double batch_accuracy = 0.0;
  double avg_return = 0.0;
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  bool has_critic = false;
};

struct TrainResult {
  Agent agent;
  std::vector<EpochRow> rows;
};

namespace detail {

// Fill `out` by running `fn(i)` for i in [0, n), optionally across threads.
// Work items are independent; determinism comes from indexing, not order.
template <class F>
void parallel_for(int n, int jobs, F fn) {
  if (jobs <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  int workers = std::min(jobs, n);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([=] {
      for (int i = w; i < n; i += workers) fn(i);
    });
  for (std::thread& t : pool) t.join();
}

}  // namespace detail

inline TrainResult train(const RunConfig& cfg, uint64_t seed) {
  cfg.validate();
  RngStream master(seed);
  Agent agent(cfg.agent_type, cfg.train_env.n_angles, master.derive({1}));
  Adam opt;
  std::vector<EpochRow> rows;
  rows.reserve(cfg.epochs);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<EpisodeTrace> batch(cfg.batch);
    detail::parallel_for(cfg.batch, cfg.jobs, [&](int i) {
      batch[i] = rollout(agent, cfg.train_env, master.derive({2, uint64_t(epoch), uint64_t(i)}));
    });
    UpdateResult up = (cfg.agent_type == AgentType::D) ? actor_critic_update(agent, batch, opt)
                                                       : reinforce_update(agent, batch, opt);
    EpochRow row;
    row.epoch = epoch;
    row.has_critic = cfg.agent_type == AgentType::D;
    row.actor_loss = up.actor_loss;
    row.critic_loss = up.critic_loss;
    for (const EpisodeTrace& tr : batch) {
      row.avg_steps += tr.probes() + 1;
      row.batch_accuracy += tr.correct() ? 1.0 : 0.0;
      row.avg_return += tr.total_return();
    }
    row.avg_steps /= cfg.batch;
    row.batch_accuracy /= cfg.batch;
    row.avg_return /= cfg.batch;
    rows.push_back(row);
  }
  return {std::move(agent), std::move(rows)};
}

inline Metrics evaluate(const Agent& agent, const EnvConfig& eval_env, int episodes, uint64_t seed,
                        bool greedy = false, int jobs = 1) {
  RngStream master(seed);
  std::vector<EpisodeTrace> traces(episodes);
  detail::parallel_for(episodes, jobs, [&](int i) {
    traces[i] = rollout(agent, eval_env, master.derive({3, uint64_t(i)}), greedy);
  });
  Metrics m;
  for (const EpisodeTrace& tr : traces) {
    m.avg_interactions += tr.probes() + 1;
    ++m.confusion[tr.true_bit][tr.guessed_bit];
  }
  m.avg_interactions /= episodes;
  m.accuracy = double(m.confusion[0][0] + m.confusion[1][1]) / episodes;
  return m;
}

struct SweepRow {
  std::string channel;
  double p = 0.0;
  std::string insertion;
  double accuracy = 0.0;
  double accuracy_std = 0.0;
};

inline std::vector<SweepRow> noise_sweep(const Agent& agent, const EnvConfig& base_eval,
                                         ChannelLabel label, bool at_transmission,
                                         const std::vector<double>& grid, int episodes,
                                         const std::vector<uint64_t>& seeds, bool greedy = false,
                                         int jobs = 1) {
  std::vector<SweepRow> rows;
  std::string insertion = at_transmission ? "transmission" : "pre_measurement";
  for (double p : grid) {
    EnvConfig cfg = base_eval;
    cfg.noise.enabled = p > 0.0;
    cfg.noise.label = label;
    cfg.noise.p = p;
    cfg.noise.at_transmission = at_transmission;
    double mean = 0.0, sq = 0.0;
    for (uint64_t s : seeds) {
      Metrics m = evaluate(agent, cfg, episodes, s, greedy, jobs);
      mean += m.accuracy;
      sq += m.accuracy * m.accuracy;
    }
    mean /= seeds.size();
    double var = std::max(0.0, sq / seeds.size() - mean * mean);
    rows.push_back({channel_name(label), p, insertion, mean, std::sqrt(var)});
  }
  return rows;
}

struct SeedAggregate {
  double mean = 0.0;
  double stddev = 0.0;  // population std, as in the result tables
};

inline SeedAggregate aggregate_seeds(const std::vector<Metrics>& per_seed) {
  if (per_seed.empty()) throw std::invalid_argument("no metrics to aggregate");
  double mean = 0.0, sq = 0.0;
  for (const Metrics& m : per_seed) {
    mean += m.accuracy;
    sq += m.accuracy * m.accuracy;
  }
  mean /= per_seed.size();
  double var = std::max(0.0, sq / per_seed.size() - mean * mean);
  return {mean, std::sqrt(var)};
}

// ---- serialization ----

inline json to_json(const EnvConfig& cfg) {
  json j{{"n_copies", cfg.n_copies}, {"penalty", cfg.penalty},   {"shots", cfg.shots},
         {"n_angles", cfg.n_angles}, {"domain_start", cfg.domain.start}};
  if (cfg.probe_start) j["probe_start"] = *cfg.probe_start;
  if (cfg.noise.enabled)
    j["noise"] = {{"label", channel_name(cfg.noise.label)},
                  {"p", cfg.noise.p},
                  {"insertion", cfg.noise.at_transmission ? "transmission" : "pre_measurement"}};
  return j;
}

inline ChannelLabel channel_from(const std::string& s) {
  if (s == "bitflip" || s == "bit_flip") return ChannelLabel::bit_flip;
  if (s == "depolarizing") return ChannelLabel::depolarizing;
  if (s == "amplitude" || s == "amplitude_damping") return ChannelLabel::amplitude_damping;
  throw std::invalid_argument("unknown noise channel: " + s);
}

inline EnvConfig env_from_json(const json& j) {
  EnvConfig cfg;
  cfg.n_copies = j.at("n_copies");
  cfg.penalty = j.at("penalty");
  cfg.shots = j.at("shots");
  cfg.n_angles = j.at("n_angles");
  cfg.domain.start = j.at("domain_start");
  if (j.contains("probe_start")) cfg.probe_start = double(j.at("probe_start"));
  if (j.contains("noise")) {
    cfg.noise.enabled = true;
    cfg.noise.label = channel_from(j.at("noise").at("label"));
    cfg.noise.p = j.at("noise").at("p");
    cfg.noise.at_transmission = j.at("noise").at("insertion") == "transmission";
  }
  return cfg;
}

inline json checkpoint_to_json(const Agent& agent, const EnvConfig& env_cfg, uint64_t seed,
                               int epoch) {
  json groups = json::object();
  for (const ParamGroup& g : agent.groups())
    groups[g.name] = {{"values", g.values}, {"learning_rate", g.learning_rate}};
  return json{{"agent_type", agent_type_name(agent.type())},
              {"env_config", to_json(env_cfg)},
              {"params", groups},
              {"rng_seed", seed},
              {"epoch", epoch}};
}

struct Checkpoint {
  Agent agent;
  EnvConfig env_cfg;
  uint64_t seed = 0;
  int epoch = 0;
};

inline Checkpoint checkpoint_from_json(const json& j) {
  EnvConfig env_cfg = env_from_json(j.at("env_config"));
  AgentType type = agent_type_from(j.at("agent_type").get<std::string>());
  Agent agent(type, env_cfg.n_angles, RngStream(0));
  for (ParamGroup& g : agent.groups()) {
    const json& src = j.at("params").at(g.name);
    std::vector<double> vals = src.at("values").get<std::vector<double>>();
    if (vals.size() != g.values.size())
      throw std::invalid_argument("checkpoint parameter shape mismatch in group " + g.name);
    g.values = std::move(vals);
    g.learning_rate = src.at("learning_rate");
  }
  return {std::move(agent), env_cfg, j.at("rng_seed"), j.at("epoch")};
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << content;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline std::string training_log_csv(const std::vector<EpochRow>& rows) {
  std::string out = "epoch,avg_steps,batch_accuracy,avg_return,actor_loss,critic_loss\n";
  for (const EpochRow& r : rows) {
    out += std::to_string(r.epoch) + ',' + format_double(r.avg_steps) + ',' +
           format_double(r.batch_accuracy) + ',' + format_double(r.avg_return) + ',' +
           format_double(r.actor_loss) + ',';
    if (r.has_critic) out += format_double(r.critic_loss);
    out += '\n';
  }
  return out;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "channel,p,insertion,accuracy,std\n";
  for (const SweepRow& r : rows)
    out += r.channel + ',' + format_double(r.p) + ',' + r.insertion + ',' +
           format_double(r.accuracy) + ',' + format_double(r.accuracy_std) + '\n';
  return out;
}

inline json metrics_to_json(const Metrics& m) {
  return json{{"accuracy", m.accuracy},
              {"avg_interactions", m.avg_interactions},
              {"confusion",
               {{m.confusion[0][0], m.confusion[0][1]}, {m.confusion[1][0], m.confusion[1][1]}}}};
}

inline json eval_report_json(AgentType type, const std::vector<uint64_t>& seeds,
                             const std::vector<Metrics>& per_seed) {
  SeedAggregate agg = aggregate_seeds(per_seed);
  json per = json::object();
  for (size_t i = 0; i < seeds.size(); ++i)
    per[std::to_string(seeds[i])] = metrics_to_json(per_seed[i]);
  return json{{"agent_type", agent_type_name(type)},
              {"seeds", seeds},
              {"per_seed", per},
              {"accuracy_mean", agg.mean},
              {"accuracy_std", agg.stddev}};
}

}  // namespace qcr
