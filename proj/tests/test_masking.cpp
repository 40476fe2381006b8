#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "uavswarm/masking.hpp"

using namespace uavswarm;

TEST(ValidTriples, EmptyAssignmentAllValid) {
  MaskState mask(9, 3, 3);
  EXPECT_EQ(valid_triples(mask).size(), 81u);
}

TEST(ValidTriples, AfterOneAssignment) {
  MaskState mask(9, 3, 3);
  mask.assign(1, 1, 1);
  for (const Triple& t : valid_triples(mask)) {
    EXPECT_NE(t.k, 1);
    EXPECT_FALSE(t.m == 1 && t.n == 1);
  }
  // 8 users x 9 slots minus the 8 users on the used slot (1,1)
  EXPECT_EQ(valid_triples(mask).size(), 8u * 8u);
}

TEST(ValidTriples, SaturationEmptiesSet) {
  MaskState mask(9, 3, 3);
  int k = 0;
  for (int m = 0; m < 3; ++m) {
    for (int n = 0; n < 3; ++n) mask.assign(k++, m, n);
  }
  EXPECT_TRUE(valid_triples(mask).empty());
}

TEST(ValidTriples, ChannelCountConjunct) {
  // with more users than slots, a subcarrier used by every UAV admits nothing
  MaskState mask(10, 2, 2);
  mask.assign(0, 0, 0);
  mask.assign(1, 1, 0);
  EXPECT_EQ(mask.channel_count(0), 2);
  for (const Triple& t : valid_triples(mask)) EXPECT_NE(t.n, 0);
}

TEST(ValidTriples, AssignRejectsInvalid) {
  MaskState mask(4, 2, 2);
  mask.assign(0, 0, 0);
  EXPECT_THROW(mask.assign(0, 1, 1), DataCorruption);
  EXPECT_THROW(mask.assign(1, 0, 0), DataCorruption);
  EXPECT_THROW(mask.assign(9, 0, 1), std::out_of_range);
}

TEST(MaskedProbabilities, Examples) {
  const std::vector<double> one{3.0, 1.0};
  const std::vector<std::uint8_t> only_second{0, 1};
  EXPECT_EQ(masked_probabilities(one, only_second).probs, (std::vector<double>{0.0, 1.0}));

  const std::vector<double> z{0.0, 0.0, std::log(2.0), 5.0};
  const std::vector<std::uint8_t> c{1, 1, 1, 0};
  const auto p = masked_probabilities(z, c).probs;
  EXPECT_NEAR(p[0], 0.25, 1e-15);
  EXPECT_NEAR(p[1], 0.25, 1e-15);
  EXPECT_NEAR(p[2], 0.5, 1e-15);
  EXPECT_EQ(p[3], 0.0);

  const std::vector<std::uint8_t> none{0, 0, 0, 0};
  EXPECT_TRUE(masked_probabilities(z, none).saturated);
}

TEST(MaskedProbabilities, NormalizedAndShiftInvariant) {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> z(12), shifted(12);
    std::vector<std::uint8_t> c(12);
    const double shift = uniform(rng, -50.0, 50.0);
    for (int j = 0; j < 12; ++j) {
      z[j] = uniform(rng, -5.0, 5.0);
      shifted[j] = z[j] + shift;
      c[j] = rng() % 3 != 0;
    }
    c[0] = 1;
    const auto p = masked_probabilities(z, c).probs;
    const auto q = masked_probabilities(shifted, c).probs;
    double s = 0.0;
    for (int j = 0; j < 12; ++j) {
      s += p[j];
      ASSERT_NEAR(p[j], q[j], 1e-12);
      if (!c[j]) {
        ASSERT_EQ(p[j], 0.0);
      }
    }
    ASSERT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(SampleAssignment, HardConstraintsOverManySamples) {
  const int K = 9, M = 3, N = 3;
  Rng rng(2024);
  for (int trial = 0; trial < 100000; ++trial) {
    std::vector<std::vector<double>> logits(M, std::vector<double>(assignment_logit_count(K, N)));
    for (auto& l : logits) {
      for (double& z : l) z = uniform(rng, -3.0, 3.0);
    }
    MaskState mask(K, M, N);
    const JointAssignment a = sample_assignment(logits, mask, &rng);
    std::vector<int> per_user(K, 0);
    std::vector<int> per_user_uav(K * M, 0);
    for (int m = 0; m < M; ++m) {
      for (int n = 0; n < N; ++n) {
        const int k = a.picks[m][n];
        if (k == kNoUser) continue;
        ++per_user[k];
        ++per_user_uav[k * M + m];
      }
    }
    for (int k = 0; k < K; ++k) ASSERT_LE(per_user[k], 1);
    for (int v : per_user_uav) ASSERT_LE(v, 1);
    ASSERT_EQ(mask, MaskState::from_picks(K, M, N, a.picks));
  }
}

TEST(SampleAssignment, IncrementalMaskMatchesRecompute) {
  const int K = 5, M = 2, N = 3;
  Rng rng(8);
  std::vector<double> logits(assignment_logit_count(K, N));
  for (double& z : logits) z = uniform(rng, -1.0, 1.0);
  MaskState mask(K, M, N);
  std::vector<std::vector<int>> picks;
  for (int m = 0; m < M; ++m) {
    picks.push_back(sample_uav_assignment(logits, mask, m, &rng).picks);
    ASSERT_EQ(mask, MaskState::from_picks(K, M, N, picks));
  }
}

TEST(SampleAssignment, NegInfLogitsPickNone) {
  const int K = 3, N = 2;
  std::vector<double> logits(assignment_logit_count(K, N), -std::numeric_limits<double>::infinity());
  logits[none_logit_index(K, N)] = 0.0;
  MaskState mask(K, 1, N);
  Rng rng(1);
  const auto s = sample_uav_assignment(logits, mask, 0, &rng);
  EXPECT_EQ(s.picks, (std::vector<int>{kNoUser, kNoUser}));
  EXPECT_EQ(s.log_prob, 0.0);
}

TEST(SampleAssignment, ForcedSequenceHasZeroLogProb) {
  // one user, and it is already taken: every pick has NONE as its only option
  MaskState mask(1, 2, 2);
  mask.assign(0, 0, 0);
  const std::vector<double> logits(assignment_logit_count(1, 2), 0.3);
  Rng rng(4);
  const auto s = sample_uav_assignment(logits, mask, 1, &rng);
  EXPECT_EQ(s.log_prob, 0.0);
  EXPECT_EQ(s.entropy, 0.0);
}

TEST(SampleAssignment, UniformEntropyIsLogCount) {
  const int K = 4, N = 1;
  const std::vector<double> logits(assignment_logit_count(K, N), 0.0);
  MaskState mask(K, 1, N);
  const PickDistribution d = pick_distribution(logits, mask, 0, 0);
  EXPECT_EQ(d.options.size(), 5u);  // four users + NONE
  EXPECT_NEAR(d.entropy, std::log(5.0), 1e-12);
}

TEST(SampleAssignment, GreedyTakesArgmax) {
  const int K = 3, N = 2;
  std::vector<double> logits(assignment_logit_count(K, N), 0.0);
  logits[assignment_logit_index(2, 0, N)] = 4.0;
  logits[assignment_logit_index(2, 1, N)] = 5.0;  // user 2 is gone by subcarrier 1
  logits[assignment_logit_index(0, 1, N)] = 1.0;
  MaskState mask(K, 1, N);
  const auto s = sample_uav_assignment(logits, mask, 0, nullptr);
  EXPECT_EQ(s.picks, (std::vector<int>{2, 0}));
}

TEST(EvaluateAssignment, MatchesSampleAndRejectsCorruption) {
  const int K = 6, M = 2, N = 3;
  Rng rng(30);
  std::vector<std::vector<double>> logits(M, std::vector<double>(assignment_logit_count(K, N)));
  for (auto& l : logits) {
    for (double& z : l) z = uniform(rng, -2.0, 2.0);
  }
  MaskState mask(K, M, N);
  const JointAssignment a = sample_assignment(logits, mask, &rng);
  MaskState replay(K, M, N);
  for (int m = 0; m < M; ++m) {
    const auto e = evaluate_uav_assignment(logits[m], replay, m, a.picks[m]);
    EXPECT_NEAR(e.log_prob, a.log_probs[m], 1e-12);
  }
  std::vector<int> bad = a.picks[0];
  MaskState fresh(K, M, N);
  fresh.assign(0, 1, 0);
  bad[0] = 0;  // user 0 already served elsewhere
  EXPECT_THROW(evaluate_uav_assignment(logits[0], fresh, 0, bad), DataCorruption);
}

TEST(EvaluateAssignment, MaskedLogitsGetNoGradient) {
  const int K = 4, N = 2;
  Rng rng(3);
  std::vector<double> logits(assignment_logit_count(K, N));
  for (double& z : logits) z = uniform(rng, -1.0, 1.0);
  MaskState mask(K, 2, N);
  mask.assign(1, 1, 0);  // user 1 is unavailable to UAV 0
  std::vector<double> grad(logits.size(), 0.0);
  const std::vector<int> picks{0, 2};
  evaluate_uav_assignment(logits, mask, 0, picks, grad, 1.0, 0.5);
  EXPECT_EQ(grad[assignment_logit_index(1, 0, N)], 0.0);
  EXPECT_EQ(grad[assignment_logit_index(1, 1, N)], 0.0);
  // user 0 taken on subcarrier 0 before the subcarrier 1 pick
  EXPECT_EQ(grad[assignment_logit_index(0, 1, N)], 0.0);
  EXPECT_NE(grad[assignment_logit_index(3, 0, N)], 0.0);
}
