#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qcr/auth.hpp"

using namespace qcr;

TEST_CASE("classical factor gate") {
  ClassicalFactor f = ClassicalFactor::enroll("salt42", "hunter2");
  CHECK(f.check("hunter2"));
  CHECK_FALSE(f.check("hunter3"));
  CHECK_FALSE(ClassicalFactor::enroll("other", "hunter2").digest == f.digest);
}

TEST_CASE("wrong password short-circuits before any challenge") {
  VerifierProfile profile = enroll(0.7, 3, /*epochs=*/1);
  AuthConfig cfg;
  ClassicalFactor f = ClassicalFactor::enroll("s", "pw");
  SessionResult res = run_session(profile, cfg, f, "wrong", RngStream(5));
  CHECK_FALSE(res.classical_ok);
  CHECK_FALSE(res.accepted);
  CHECK(res.transcript.empty());
  CHECK(res.correct_fraction == 0.0);
}

TEST_CASE("session transcript shape and determinism") {
  VerifierProfile profile = enroll(0.4, 1, /*epochs=*/60);
  AuthConfig cfg;
  cfg.session_bits = 16;
  ClassicalFactor f = ClassicalFactor::enroll("s", "pw");
  SessionResult a = run_session(profile, cfg, f, "pw", RngStream(7));
  SessionResult b = run_session(profile, cfg, f, "pw", RngStream(7));
  CHECK(a.classical_ok);
  CHECK(a.transcript.size() == 16);
  int correct = 0;
  for (size_t i = 0; i < a.transcript.size(); ++i) {
    const ChallengeRecord& c = a.transcript[i];
    CHECK(c.steps >= 1);
    CHECK(c.steps <= cfg.copies_per_challenge + 1);
    CHECK((c.b == 0 || c.b == 1));
    CHECK((c.b_hat == 0 || c.b_hat == 1));
    if (c.b == c.b_hat) ++correct;
    CHECK(c.b == b.transcript[i].b);
    CHECK(c.b_hat == b.transcript[i].b_hat);
  }
  CHECK(a.correct_fraction == doctest::Approx(double(correct) / 16).epsilon(1e-12));
  CHECK(a.accepted == (a.correct_fraction >= cfg.threshold));
  CHECK(a.accepted == b.accepted);
}

TEST_CASE("legitimate verifier beats the mismatched-domain adversary") {
  const int epochs = 120;
  VerifierProfile profile = enroll(0.0, 0, epochs);
  AuthConfig cfg;
  ClassicalFactor f = ClassicalFactor::enroll("s", "pw");
  int accepted = 0;
  double fraction = 0.0;
  RngStream master(99);
  for (int s = 0; s < 10; ++s) {
    SessionResult res = run_session(profile, cfg, f, "pw", master.derive({uint64_t(s)}));
    accepted += res.accepted ? 1 : 0;
    fraction += res.correct_fraction;
  }
  fraction /= 10;
  CHECK(fraction > 0.6);

  EveResult eve = eve_attack(0.0, kPi / 2, /*n_bits=*/300, /*n_sessions=*/20, cfg, 0, epochs);
  CHECK(eve.bits == 300);
  CHECK(eve.sessions == 20);
  CHECK(eve.per_bit_accuracy < 0.75);
  CHECK(eve.per_bit_accuracy < fraction);
  CHECK(eve.acceptance_rate <= 0.5);
}

TEST_CASE("binomial acceptance tail oracle") {
  CHECK(binomial_acceptance_probability(1, 0.5, 0.5) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(binomial_acceptance_probability(2, 0.5, 0.5) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(binomial_acceptance_probability(10, 0.3, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(binomial_acceptance_probability(10, 0.0, 0.5) == 0.0);
  CHECK(binomial_acceptance_probability(10, 1.0, 1.0) == 1.0);

  // brute force with exact coefficients for n = 8
  auto brute = [](int n, double p, double tau) {
    double total = 0.0;
    for (int k = 0; k <= n; ++k) {
      if (k < tau * n - 1e-12) continue;
      double c = 1.0;
      for (int i = 0; i < k; ++i) c = c * (n - i) / (i + 1);
      total += c * std::pow(p, k) * std::pow(1 - p, n - k);
    }
    return total;
  };
  for (double p : {0.1, 0.44, 0.8, 0.97})
    for (double tau : {0.25, 0.5, 0.8})
      CHECK(binomial_acceptance_probability(8, p, tau) ==
            doctest::Approx(brute(8, p, tau)).epsilon(1e-10));

  // monotone in the per-bit accuracy
  double prev = 0.0;
  for (double p = 0.05; p < 1.0; p += 0.05) {
    double cur = binomial_acceptance_probability(32, p, 0.8);
    CHECK(cur >= prev - 1e-12);
    prev = cur;
  }
  // a coin-flip adversary is essentially never accepted at tau = 0.8
  CHECK(binomial_acceptance_probability(32, 0.5, 0.8) < 3e-4);
}

TEST_CASE("transcript serialization redacts the domain") {
  VerifierProfile profile = enroll(1.1, 2, /*epochs=*/1);
  AuthConfig cfg;
  cfg.session_bits = 4;
  ClassicalFactor f = ClassicalFactor::enroll("s", "pw");
  SessionResult res = run_session(profile, cfg, f, "pw", RngStream(8));
  json j = transcript_to_json(res, cfg);
  CHECK(j.at("domain_start") == "redacted");
  CHECK(j.at("n_challenges") == 4);
  CHECK(j.at("per_challenge").size() == 4);
  CHECK(j.at("threshold") == 0.8);
  std::string dumped = j.dump();
  CHECK(dumped.find("1.1") == std::string::npos);
}
