#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qcr/harness.hpp"

using namespace qcr;

TEST_CASE("single epoch run report") {
  RunConfig rc = RunConfig::defaults(AgentType::C, 0.5);
  rc.epochs = 1;
  TrainResult res = train(rc, 0);
  CHECK(res.rows.size() == 1);
  CHECK(res.rows[0].avg_steps >= 1.0);
  CHECK(res.rows[0].avg_steps <= rc.train_env.n_copies + 1.0);
}

TEST_CASE("training is bitwise reproducible") {
  for (AgentType type : {AgentType::C, AgentType::S, AgentType::D}) {
    RunConfig rc = RunConfig::defaults(type, 0.5);
    rc.epochs = type == AgentType::D ? 2 : 5;
    TrainResult a = train(rc, 7);
    TrainResult b = train(rc, 7);
    CHECK(training_log_csv(a.rows) == training_log_csv(b.rows));
    for (size_t g = 0; g < a.agent.groups().size(); ++g)
      CHECK(a.agent.groups()[g].values == b.agent.groups()[g].values);

    Metrics ma = evaluate(a.agent, rc.eval_env, 100, 3);
    Metrics mb = evaluate(b.agent, rc.eval_env, 100, 3);
    CHECK(eval_report_json(type, {3}, {ma}).dump() == eval_report_json(type, {3}, {mb}).dump());
  }
}

TEST_CASE("parallel rollouts match the serial reference") {
  RunConfig serial = RunConfig::defaults(AgentType::S, 0.5);
  serial.epochs = 4;
  RunConfig parallel = serial;
  parallel.jobs = 4;
  TrainResult a = train(serial, 5);
  TrainResult b = train(parallel, 5);
  CHECK(training_log_csv(a.rows) == training_log_csv(b.rows));
  for (size_t g = 0; g < a.agent.groups().size(); ++g)
    CHECK(a.agent.groups()[g].values == b.agent.groups()[g].values);

  Metrics ms = evaluate(a.agent, serial.eval_env, 500, 1, false, 1);
  Metrics mp = evaluate(a.agent, serial.eval_env, 500, 1, false, 4);
  CHECK(ms.accuracy == mp.accuracy);
  CHECK(ms.avg_interactions == mp.avg_interactions);
}

TEST_CASE("evaluation metrics internals") {
  RunConfig rc = RunConfig::defaults(AgentType::C, 0.5);
  rc.epochs = 1;
  TrainResult res = train(rc, 1);
  Metrics m = evaluate(res.agent, rc.eval_env, 400, 9);
  CHECK(m.episodes() == 400);
  CHECK(m.accuracy ==
        doctest::Approx(double(m.confusion[0][0] + m.confusion[1][1]) / 400).epsilon(1e-12));
  CHECK(m.avg_interactions >= 1.0);
  CHECK(m.avg_interactions <= rc.eval_env.n_copies + 1.0);

  Metrics m2 = evaluate(res.agent, rc.eval_env, 400, 9);
  CHECK(m.accuracy == m2.accuracy);
  CHECK(m.confusion[0][1] == m2.confusion[0][1]);
}

TEST_CASE("degenerate always-guess-zero policy") {
  Agent agent(AgentType::C, 8, RngStream(2));
  ParamGroup& g = agent.group("classical_policy");
  std::fill(g.values.begin(), g.values.end(), 0.0);
  g.values[g.values.size() - 2] = 50.0;  // Terminate(0) bias
  EnvConfig eval_env;
  eval_env.n_copies = 2;
  Metrics m = evaluate(agent, eval_env, 1000, 4);
  CHECK(m.confusion[0][1] == 0);
  CHECK(m.confusion[1][1] == 0);
  CHECK(std::fabs(m.accuracy - 0.5) < 0.03);
  CHECK(m.avg_interactions == 1.0);
}

TEST_CASE("noise sweep baseline equals noiseless evaluation") {
  RunConfig rc = RunConfig::defaults(AgentType::S, 0.5);
  rc.epochs = 2;
  TrainResult res = train(rc, 11);
  Metrics clean = evaluate(res.agent, rc.eval_env, 200, 5);
  auto rows = noise_sweep(res.agent, rc.eval_env, ChannelLabel::depolarizing, false,
                          {0.0, 1.0}, 200, {5});
  CHECK(rows.size() == 2);
  CHECK(rows[0].accuracy == clean.accuracy);
  CHECK(std::fabs(rows[1].accuracy - 0.5) < 0.08);
}

TEST_CASE("seed aggregation") {
  Metrics a, b, c;
  a.accuracy = 0.87;
  b.accuracy = 0.88;
  c.accuracy = 0.89;
  SeedAggregate agg = aggregate_seeds({a, b, c});
  CHECK(agg.mean == doctest::Approx(0.88).epsilon(1e-12));
  CHECK(agg.stddev == doctest::Approx(std::sqrt(2.0 / 3.0) * 0.01).epsilon(1e-9));

  SeedAggregate single = aggregate_seeds({a});
  CHECK(single.stddev == 0.0);
  SeedAggregate same = aggregate_seeds({a, a, a});
  CHECK(same.stddev < 1e-12);
  CHECK_THROWS_AS(aggregate_seeds({}), std::invalid_argument);
}

TEST_CASE("checkpoint roundtrip preserves behavior") {
  RunConfig rc = RunConfig::defaults(AgentType::S, 0.05);
  rc.epochs = 3;
  TrainResult res = train(rc, 13);
  json ck = checkpoint_to_json(res.agent, rc.train_env, 13, rc.epochs);
  Checkpoint loaded = checkpoint_from_json(json::parse(ck.dump()));
  CHECK(loaded.seed == 13);
  CHECK(loaded.epoch == rc.epochs);
  CHECK(loaded.env_cfg.penalty == rc.train_env.penalty);

  Metrics before = evaluate(res.agent, rc.eval_env, 300, 17);
  Metrics after = evaluate(loaded.agent, rc.eval_env, 300, 17);
  CHECK(before.accuracy == after.accuracy);
  CHECK(before.avg_interactions == after.avg_interactions);
}

TEST_CASE("env config json roundtrip") {
  EnvConfig cfg;
  cfg.penalty = 0.05;
  cfg.domain.start = 1.2;
  cfg.probe_start = 0.4;
  cfg.noise.enabled = true;
  cfg.noise.label = ChannelLabel::amplitude_damping;
  cfg.noise.p = 0.3;
  cfg.noise.at_transmission = true;
  EnvConfig back = env_from_json(to_json(cfg));
  CHECK(back.penalty == cfg.penalty);
  CHECK(back.domain.start == cfg.domain.start);
  CHECK(back.probe_start.value() == 0.4);
  CHECK(back.noise.enabled);
  CHECK(back.noise.label == ChannelLabel::amplitude_damping);
  CHECK(back.noise.at_transmission);

  EnvConfig plain;
  EnvConfig plain_back = env_from_json(to_json(plain));
  CHECK_FALSE(plain_back.noise.enabled);
  CHECK_FALSE(plain_back.probe_start.has_value());
}

TEST_CASE("csv formats") {
  EpochRow r;
  r.epoch = 0;
  r.avg_steps = 2.5;
  r.batch_accuracy = 0.5;
  r.avg_return = -0.25;
  r.actor_loss = 1.0;
  std::string csv = training_log_csv({r});
  CHECK(csv.find("epoch,avg_steps,batch_accuracy,avg_return,actor_loss,critic_loss\n") == 0);
  CHECK(csv.find("0,2.5,0.5,-0.25,1,\n") != std::string::npos);

  SweepRow s{"bitflip", 0.1, "pre_measurement", 0.8, 0.01};
  CHECK(sweep_csv({s}).find("bitflip,0.1,pre_measurement,0.8,0.01\n") != std::string::npos);
}
