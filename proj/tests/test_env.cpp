#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qcr/env.hpp"

using namespace qcr;

TEST_CASE("probe angle formula") {
  EnvConfig cfg;
  cfg.n_angles = 8;
  CHECK(probe_angle(cfg, 0) == doctest::Approx(kPi / 16).epsilon(1e-12));
  CHECK(probe_angle(cfg, 7) == doctest::Approx(15 * kPi / 16).epsilon(1e-12));
  EnvConfig two = cfg;
  two.n_angles = 2;
  CHECK(probe_angle(two, 1) == doctest::Approx(3 * kPi / 4).epsilon(1e-12));
  CHECK_THROWS_AS(probe_angle(cfg, 8), std::out_of_range);
}

TEST_CASE("true p1 formula") {
  CHECK(true_p1(1, 0.4, 0.4) == doctest::Approx(1.0));
  CHECK(true_p1(0, 0.0, kPi / 2) == doctest::Approx(0.5));
  CHECK(true_p1(0, 0.0, kPi) == doctest::Approx(1.0));
}

TEST_CASE("reset determinism and sentinel observation") {
  EnvConfig cfg;
  Env a(cfg, RngStream(4)), b(cfg, RngStream(4));
  Observation oa = a.reset(), ob = b.reset();
  CHECK(a.state().j == b.state().j);
  CHECK(a.state().phi1 == b.state().phi1);
  CHECK(oa.sin_phi2 == 0.0);
  CHECK(oa.cos_phi2 == 0.0);
  CHECK(oa.p1_hat == 0.5);
  CHECK(oa.progress == 0.0);
  (void)ob;
}

TEST_CASE("reset statistics") {
  EnvConfig cfg;
  cfg.domain.start = 0.3;
  RngStream master(8);
  long ones = 0;
  for (int i = 0; i < 100000; ++i) {
    Env env(cfg, master.derive({uint64_t(i)}));
    env.reset();
    ones += env.state().j;
    CHECK(env.state().phi1 >= 0.3);
    CHECK(env.state().phi1 < 0.3 + kPi);
  }
  CHECK(std::fabs(ones / 100000.0 - 0.5) < 0.01);
}

TEST_CASE("worked reward example: five probes then correct guess") {
  EnvConfig cfg;
  cfg.penalty = 0.05;
  Env env(cfg, RngStream(1));
  env.reset();
  double total = 0.0;
  for (int i = 0; i < 5; ++i) total += env.step(Action{0}).reward;
  Action guess{cfg.n_angles + env.state().j};
  Env::StepResult last = env.step(guess);
  total += last.reward;
  CHECK(last.done);
  CHECK(total == 0.75);  // (-0.25) + 1.0
}

TEST_CASE("immediate terminate and wrong guesses") {
  EnvConfig cfg;
  cfg.penalty = 0.5;
  {
    Env env(cfg, RngStream(2));
    env.reset();
    Action correct{cfg.n_angles + env.state().j};
    Env::StepResult r = env.step(correct);
    CHECK(r.reward == 1.0);
    CHECK(env.state().copies_used == 0);
  }
  {
    Env env(cfg, RngStream(2));
    env.reset();
    double total = 0.0;
    total += env.step(Action{3}).reward;
    total += env.step(Action{5}).reward;
    Action wrong{cfg.n_angles + (1 - env.state().j)};
    total += env.step(wrong).reward;
    CHECK(total == -2.0);
  }
}

TEST_CASE("mask and copy budget") {
  EnvConfig cfg;
  cfg.n_copies = 3;
  Env env(cfg, RngStream(5));
  env.reset();
  for (int i = 0; i < 3; ++i) {
    auto mask = env.action_mask();
    for (int k = 0; k < cfg.n_angles; ++k) CHECK_FALSE(mask[k]);
    Env::StepResult r = env.step(Action{1});
    CHECK(r.observation.progress == doctest::Approx((i + 1) / 3.0));
  }
  auto mask = env.action_mask();
  for (int k = 0; k < cfg.n_angles; ++k) CHECK(mask[k]);
  CHECK_FALSE(mask[cfg.n_angles]);
  CHECK_THROWS_AS(env.step(Action{0}), std::logic_error);
  env.step(Action{cfg.n_angles});
  CHECK_THROWS_AS(env.step(Action{cfg.n_angles}), std::logic_error);
}

TEST_CASE("observation geometry") {
  EnvConfig cfg;
  Env env(cfg, RngStream(6));
  env.reset();
  Env::StepResult r = env.step(Action{4});
  double phi2 = probe_angle(cfg, 4);
  CHECK(r.observation.sin_phi2 == doctest::Approx(std::sin(phi2)).epsilon(1e-12));
  CHECK(r.observation.cos_phi2 == doctest::Approx(std::cos(phi2)).epsilon(1e-12));
  double ss = r.observation.sin_phi2 * r.observation.sin_phi2 +
              r.observation.cos_phi2 * r.observation.cos_phi2;
  CHECK(std::fabs(ss - 1.0) < 1e-9);
}

TEST_CASE("p1_hat concentrates on the true probability") {
  EnvConfig cfg;
  cfg.n_copies = 1;
  RngStream master(12);
  // fix the hidden pair by rejecting resets until a narrow band is hit
  double mean = 0.0;
  int kept = 0;
  double ref = -1.0;
  for (int i = 0; i < 200000 && kept < 10000; ++i) {
    Env env(cfg, master.derive({uint64_t(i)}));
    env.reset();
    if (env.state().j != 1) continue;
    if (std::fabs(env.state().phi1 - 1.0) > 0.01) continue;
    if (ref < 0) ref = true_p1(1, env.state().phi1, probe_angle(cfg, 2));
    mean += env.step(Action{2}).observation.p1_hat;
    ++kept;
  }
  REQUIRE(kept > 500);
  mean /= kept;
  CHECK(std::fabs(mean - ref) < 0.02);
}

TEST_CASE("zero-strength noise leaves the outcome stream unchanged") {
  EnvConfig clean;
  EnvConfig noisy = clean;
  noisy.noise.enabled = true;
  noisy.noise.label = ChannelLabel::depolarizing;
  noisy.noise.p = 0.0;
  for (uint64_t s = 0; s < 50; ++s) {
    Env a(clean, RngStream(s)), b(noisy, RngStream(s));
    a.reset();
    b.reset();
    for (int t = 0; t < 3; ++t) {
      auto ra = a.step(Action{int(s % 8)});
      auto rb = b.step(Action{int(s % 8)});
      CHECK(ra.observation.p1_hat == rb.observation.p1_hat);
    }
  }
}

TEST_CASE("full-strength pre-measurement bit flip inverts every outcome") {
  EnvConfig clean;
  EnvConfig flipped = clean;
  flipped.noise.enabled = true;
  flipped.noise.label = ChannelLabel::bit_flip;
  flipped.noise.p = 1.0;
  flipped.noise.at_transmission = false;
  for (uint64_t s = 0; s < 100; ++s) {
    Env a(clean, RngStream(s)), b(flipped, RngStream(s));
    a.reset();
    b.reset();
    auto ra = a.step(Action{int(s % 8)});
    auto rb = b.step(Action{int(s % 8)});
    CHECK(rb.observation.p1_hat == doctest::Approx(1.0 - ra.observation.p1_hat).epsilon(1e-12));
  }
}

TEST_CASE("episode return accounting") {
  std::vector<StepRecord> trace;
  trace.push_back({Observation{}, {}, 0, -0.5});
  trace.push_back({Observation{}, {}, 1, -0.5});
  trace.push_back({Observation{}, {}, 9, 1.0});
  CHECK(episode_return(trace) == 0.0);
  CHECK_THROWS_AS(episode_return({}), std::invalid_argument);
}

TEST_CASE("probe domain can differ from the challenge domain") {
  EnvConfig cfg;
  cfg.domain.start = 0.0;
  cfg.probe_start = kPi / 2;
  CHECK(probe_angle(cfg, 0) == doctest::Approx(kPi / 2 + kPi / 16).epsilon(1e-12));
  Env env(cfg, RngStream(3));
  env.reset();
  CHECK(env.state().phi1 < kPi);
}
