#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "qcr/auth.hpp"
#include "qcr/harness.hpp"

namespace fs = std::filesystem;
using namespace qcr;

namespace {

constexpr const char* kToolVersion = "1.0.0";

struct CommonFlags {
  std::string agent = "s";
  double penalty = 0.5;
  int copies = 10;
  int shots = 4;
  int angles = 8;
  double domain_start = 0.0;
  int epochs = 300;
  int batch = 30;
  uint64_t seed = 0;
  std::string seeds;
  std::string noise;
  double noise_p = 0.0;
  std::string insertion = "pre_measurement";
  bool greedy = false;
  std::string out = "runs/out";
  int jobs = 1;
};

void add_env_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--penalty", f.penalty, "Per-probe penalty X");
  cmd->add_option("--copies", f.copies, "Copy budget N");
  cmd->add_option("--shots", f.shots, "Measurement shots per probe");
  cmd->add_option("--angles", f.angles, "Number of discrete probe angles K");
  cmd->add_option("--domain-start", f.domain_start, "Angular domain start (radians)");
  cmd->add_option("--noise", f.noise, "Noise channel: bitflip|depolarizing|amplitude");
  cmd->add_option("--noise-p", f.noise_p, "Noise strength in [0,1]");
  cmd->add_option("--insertion", f.insertion, "Noise insertion: transmission|pre_measurement");
}

std::vector<uint64_t> parse_seeds(const std::string& s, uint64_t fallback) {
  if (s.empty()) return {fallback};
  std::vector<uint64_t> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stoull(tok));
  return out;
}

uint64_t effective_seed(const CommonFlags& f) {
  if (const char* env = std::getenv("QCR_SEED")) return std::stoull(env);
  return f.seed;
}

EnvConfig env_from_flags(const CommonFlags& f) {
  EnvConfig cfg;
  cfg.penalty = f.penalty;
  cfg.n_copies = f.copies;
  cfg.shots = f.shots;
  cfg.n_angles = f.angles;
  cfg.domain.start = f.domain_start;
  if (!f.noise.empty()) {
    cfg.noise.enabled = true;
    cfg.noise.label = channel_from(f.noise);
    cfg.noise.p = f.noise_p;
    cfg.noise.at_transmission = f.insertion == "transmission";
  }
  return cfg;
}

void write_config(const fs::path& dir, const json& cfg) {
  json j = cfg;
  j["tool_version"] = kToolVersion;
  write_file((dir / "config.json").string(), j.dump(2) + "\n");
}

int cmd_train(const CommonFlags& f) {
  RunConfig rc;
  rc.agent_type = agent_type_from(f.agent);
  rc.train_env = env_from_flags(f);
  rc.eval_env = rc.train_env;
  rc.eval_env.n_copies = 2;
  rc.epochs = f.epochs;
  rc.batch = f.batch;
  rc.jobs = f.jobs;
  uint64_t seed = effective_seed(f);

  fs::create_directories(f.out);
  write_config(f.out, json{{"command", "train"},
                           {"agent", agent_type_name(rc.agent_type)},
                           {"env", to_json(rc.train_env)},
                           {"epochs", rc.epochs},
                           {"batch", rc.batch},
                           {"seed", seed},
                           {"jobs", rc.jobs}});

  TrainResult res = train(rc, seed);
  write_file((fs::path(f.out) / "training_log.csv").string(), training_log_csv(res.rows));
  json ckpt = checkpoint_to_json(res.agent, rc.train_env, seed, rc.epochs);
  write_file((fs::path(f.out) / "ckpt.json").string(), ckpt.dump(2) + "\n");
  const EpochRow& last = res.rows.back();
  std::cout << "trained " << agent_type_name(rc.agent_type) << "-agent: final avg interactions "
            << format_double(last.avg_steps) << ", batch accuracy "
            << format_double(last.batch_accuracy) << "\n";
  return 0;
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  json j;
  in >> j;
  return checkpoint_from_json(j);
}

int cmd_eval(const std::string& ckpt_path, int episodes, int copies, const CommonFlags& f) {
  Checkpoint ck = load_checkpoint(ckpt_path);
  EnvConfig eval_env = ck.env_cfg;
  eval_env.n_copies = copies;
  std::vector<uint64_t> seeds = parse_seeds(f.seeds, effective_seed(f));
  std::vector<Metrics> per_seed;
  for (uint64_t s : seeds)
    per_seed.push_back(evaluate(ck.agent, eval_env, episodes, s, f.greedy, f.jobs));
  json report = eval_report_json(ck.agent.type(), seeds, per_seed);
  fs::create_directories(f.out);
  write_file((fs::path(f.out) / "eval.json").string(), report.dump(2) + "\n");
  std::cout << "accuracy " << format_double(report["accuracy_mean"].get<double>()) << " +/- "
            << format_double(report["accuracy_std"].get<double>()) << " over " << seeds.size()
            << " seed(s)\n";
  return 0;
}

int cmd_noise_sweep(const std::string& ckpt_path, const std::string& grid_spec, int episodes,
                    const CommonFlags& f) {
  Checkpoint ck = load_checkpoint(ckpt_path);
  EnvConfig eval_env = ck.env_cfg;
  eval_env.n_copies = 2;
  double lo = 0.0, hi = 1.0, step = 0.1;
  if (!grid_spec.empty()) {
    std::stringstream ss(grid_spec);
    std::string a, b, c;
    std::getline(ss, a, ':');
    std::getline(ss, b, ':');
    std::getline(ss, c, ':');
    lo = std::stod(a);
    hi = std::stod(b);
    step = std::stod(c);
  }
  std::vector<double> grid;
  for (double p = lo; p <= hi + 1e-9; p += step) grid.push_back(std::min(p, 1.0));
  std::vector<uint64_t> seeds = parse_seeds(f.seeds, effective_seed(f));
  std::vector<SweepRow> rows =
      noise_sweep(ck.agent, eval_env, channel_from(f.noise.empty() ? "bitflip" : f.noise),
                  f.insertion == "transmission", grid, episodes, seeds, f.greedy, f.jobs);
  fs::create_directories(f.out);
  write_file((fs::path(f.out) / "noise_sweep.csv").string(), sweep_csv(rows));
  std::cout << "swept " << rows.size() << " noise levels\n";
  return 0;
}

int cmd_auth_demo(const CommonFlags& f, double eve_offset, int sessions) {
  uint64_t seed = effective_seed(f);
  AuthConfig acfg;
  std::cout << "enrolling verifier (domain start " << format_double(f.domain_start) << ")...\n";
  VerifierProfile profile = enroll(f.domain_start, seed, f.epochs, 0.05, f.jobs);
  ClassicalFactor factor = ClassicalFactor::enroll("demo-salt", "demo-password");

  RngStream master(seed);
  int accepted = 0;
  SessionResult sample;
  for (int s = 0; s < sessions; ++s) {
    SessionResult res = run_session(profile, acfg, factor, "demo-password",
                                    master.derive({20, uint64_t(s)}));
    if (s == 0) sample = res;
    if (res.accepted) ++accepted;
  }
  std::cout << "legitimate acceptance rate: " << format_double(double(accepted) / sessions)
            << " over " << sessions << " sessions\n";

  SessionResult bad = run_session(profile, acfg, factor, "wrong-password", master.derive({21}));
  std::cout << "wrong password: " << (bad.accepted ? "accept" : "reject") << " ("
            << bad.transcript.size() << " quantum challenges issued)\n";

  EveResult eve = eve_attack(f.domain_start, f.domain_start + eve_offset, 1000, sessions, acfg,
                             seed + 1, f.epochs, f.jobs);
  std::cout << "eve per-bit accuracy: " << format_double(eve.per_bit_accuracy)
            << ", session acceptance rate: " << format_double(eve.acceptance_rate) << "\n";

  fs::create_directories(f.out);
  write_file((fs::path(f.out) / "auth_transcript.json").string(),
             transcript_to_json(sample, acfg).dump(2) + "\n");
  return 0;
}

int cmd_verify_oracles();

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum challenge-response RL environment and agents"};
  app.require_subcommand(1);
  CommonFlags f;

  CLI::App* tr = app.add_subcommand("train", "Train an agent and write a checkpoint");
  tr->add_option("--agent", f.agent, "Agent type: c|d|s");
  add_env_flags(tr, f);
  tr->add_option("--epochs", f.epochs, "Training epochs");
  tr->add_option("--batch", f.batch, "Episodes per batch");
  tr->add_option("--seed,-s", f.seed, "Training seed");
  tr->add_option("--out", f.out, "Output directory");
  tr->add_option("--jobs", f.jobs, "Rollout worker threads");

  std::string ckpt_path, grid_spec;
  int episodes = 1000, copies = 2, sessions = 200;
  double eve_offset = kPi / 2;

  CLI::App* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
  ev->add_option("--checkpoint", ckpt_path, "Checkpoint JSON path")->required();
  ev->add_option("--episodes", episodes, "Evaluation episodes per seed");
  ev->add_option("--copies", copies, "Copy budget during evaluation");
  ev->add_option("--seeds", f.seeds, "Comma-separated evaluation seeds");
  ev->add_option("--seed,-s", f.seed, "Evaluation seed (if --seeds not given)");
  ev->add_flag("--greedy", f.greedy, "Greedy action selection");
  ev->add_option("--out", f.out, "Output directory");
  ev->add_option("--jobs", f.jobs, "Worker threads");

  CLI::App* ns = app.add_subcommand("noise-sweep", "Accuracy vs noise strength");
  ns->add_option("--checkpoint", ckpt_path, "Checkpoint JSON path")->required();
  ns->add_option("--channel", f.noise, "bitflip|depolarizing|amplitude")->required();
  ns->add_option("--insertion", f.insertion, "transmission|pre_measurement");
  ns->add_option("--grid", grid_spec, "lo:hi:step (default 0:1:0.1)");
  ns->add_option("--episodes", episodes, "Episodes per grid point");
  ns->add_option("--seeds", f.seeds, "Comma-separated evaluation seeds");
  ns->add_flag("--greedy", f.greedy, "Greedy action selection");
  ns->add_option("--out", f.out, "Output directory");
  ns->add_option("--jobs", f.jobs, "Worker threads");

  CLI::App* au = app.add_subcommand("auth-demo", "Authentication protocol demo");
  au->add_option("--domain-start", f.domain_start, "Shared secret domain start");
  au->add_option("--eve-offset", eve_offset, "Eve's domain offset (radians)");
  au->add_option("--sessions", sessions, "Sessions per experiment");
  au->add_option("--epochs", f.epochs, "Enrollment training epochs");
  au->add_option("--seed,-s", f.seed, "Seed");
  au->add_option("--out", f.out, "Output directory");
  au->add_option("--jobs", f.jobs, "Worker threads");

  CLI::App* vo = app.add_subcommand("verify-oracles", "Run the analytic oracle suites");

  try {
    app.parse(argc, argv);
    if (tr->parsed()) return cmd_train(f);
    if (ev->parsed()) return cmd_eval(ckpt_path, episodes, copies, f);
    if (ns->parsed()) return cmd_noise_sweep(ckpt_path, grid_spec, episodes, f);
    if (au->parsed()) return cmd_auth_demo(f, eve_offset, sessions);
    if (vo->parsed()) return cmd_verify_oracles();
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

namespace {

// Fast deterministic self-checks: closed-form probability grid,
// finite-difference gradients, parameter-shift gradients, channel algebra.
int cmd_verify_oracles() {
  int failures = 0;
  auto check = [&](const std::string& name, bool ok) {
    std::cout << (ok ? "PASS " : "FAIL ") << name << "\n";
    if (!ok) ++failures;
  };

  double worst = 0.0;
  for (int j = 0; j < 2; ++j)
    for (int a = 0; a < 50; ++a)
      for (int b = 0; b < 50; ++b) {
        double phi1 = a * 2.0 * kPi / 50, phi2 = b * 2.0 * kPi / 50;
        worst = std::max(worst, std::fabs(challenge_p1(j, phi1, phi2) -
                                          challenge_p1_closed_form(j, phi1, phi2)));
      }
  check("probability closed form (50x50 grid, both j)", worst < 1e-12);

  for (ChannelLabel label :
       {ChannelLabel::bit_flip, ChannelLabel::depolarizing, ChannelLabel::amplitude_damping}) {
    bool ok = true;
    for (int i = 0; i <= 10; ++i) {
      KrausChannel ch = make_channel(label, i / 10.0);
      cplx sum[4] = {0, 0, 0, 0};
      for (const Gate2& k : ch.operators) {
        sum[0] += std::conj(k[0]) * k[0] + std::conj(k[2]) * k[2];
        sum[1] += std::conj(k[0]) * k[1] + std::conj(k[2]) * k[3];
        sum[2] += std::conj(k[1]) * k[0] + std::conj(k[3]) * k[2];
        sum[3] += std::conj(k[1]) * k[1] + std::conj(k[3]) * k[3];
      }
      ok = ok && std::abs(sum[0] - 1.0) < 1e-10 && std::abs(sum[3] - 1.0) < 1e-10 &&
           std::abs(sum[1]) < 1e-10 && std::abs(sum[2]) < 1e-10;
    }
    check("Kraus completeness: " + channel_name(label), ok);
  }

  {
    RngStream rng(12345);
    DeepActorShape shape{4, 10};
    std::vector<double> lambda(32), theta(32), w(10), obs(4);
    bool ok = true;
    for (int trial = 0; trial < 5 && ok; ++trial) {
      for (double& v : lambda) v = rng.uniform(-1, 1);
      for (double& v : theta) v = rng.uniform(-1, 1);
      for (double& v : w) v = rng.uniform(-1, 1);
      for (double& v : obs) v = rng.uniform(-1, 1);
      for (int pi = 0; pi < 32 && ok; pi += 7) {
        double base_plus, base_minus;
        std::vector<double> th = theta;
        th[pi] = theta[pi] + kPi / 2;
        base_plus = deep_actor_logits_qsim(shape, lambda.data(), th.data(), w.data(), obs)[0];
        th[pi] = theta[pi] - kPi / 2;
        base_minus = deep_actor_logits_qsim(shape, lambda.data(), th.data(), w.data(), obs)[0];
        double shift_grad = (base_plus - base_minus) / 2.0;

        Tape tape;
        std::vector<Var> lv, tv, wv, ov;
        for (double v : lambda) lv.push_back(leaf(tape, v));
        for (double v : theta) tv.push_back(leaf(tape, v));
        for (double v : w) wv.push_back(leaf(tape, v));
        std::vector<Var> obs_v;
        for (double v : obs) obs_v.push_back(leaf(tape, v));
        std::vector<Var> lg = deep_actor_logits<Var>(shape, lv.data(), tv.data(), wv.data(),
                                                     obs_v, leaf(tape, 1.0), leaf(tape, 0.0));
        tape.backward(lg[0].id);
        ok = std::fabs(tv[pi].grad() - shift_grad) < 1e-8;
      }
    }
    check("parameter-shift vs backprop (deep actor)", ok);
  }

  {
    // finite differences through a small random policy network
    RngStream rng(777);
    bool ok = true;
    for (int trial = 0; trial < 10 && ok; ++trial) {
      Agent agent(AgentType::S, 8, rng.derive({uint64_t(trial)}));
      std::vector<double> obs = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0, 1),
                                 rng.uniform(0, 1)};
      std::vector<bool> mask(10, false);
      Tape tape;
      std::vector<std::vector<Var>> pvars;
      for (const ParamGroup& g : agent.groups()) {
        std::vector<Var> vs;
        for (double v : g.values) vs.push_back(leaf(tape, v));
        pvars.push_back(std::move(vs));
      }
      std::vector<Var> lg = agent.logits_on_tape(tape, pvars, obs);
      Var loss = masked_log_softmax_at(lg, mask, 3);
      tape.backward(loss.id);
      int gi = 0;
      for (size_t pick : {size_t{0}, size_t{2}}) {
        double h = 1e-5;
        double saved = agent.groups()[gi].values[pick];
        auto eval_loss = [&] {
          std::vector<double> l = agent.logits(obs);
          std::vector<double> p = masked_softmax(l, mask);
          return std::log(p[3]);
        };
        agent.groups()[gi].values[pick] = saved + h;
        double up = eval_loss();
        agent.groups()[gi].values[pick] = saved - h;
        double dn = eval_loss();
        agent.groups()[gi].values[pick] = saved;
        double fd = (up - dn) / (2 * h);
        double an = pvars[gi][pick].grad();
        ok = ok && std::fabs(fd - an) <= 1e-5 * std::max(1.0, std::fabs(fd));
      }
    }
    check("finite differences vs backprop (shallow policy)", ok);
  }

  std::cout << (failures == 0 ? "all oracle suites passed\n" : "oracle failures detected\n");
  return failures == 0 ? 0 : 1;
}

}  // namespace
