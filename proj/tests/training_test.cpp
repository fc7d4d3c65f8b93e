#include <gtest/gtest.h>

#include <cmath>
#include <optional>
#include <random>
#include <numeric>
#include <set>

#include "mbvd/core/errors.hpp"
#include "mbvd/env/factory.hpp"
#include "mbvd/training/learner.hpp"
#include "support/grad_check.hpp"

namespace mbvd::training {
namespace {

env::EnvSpec micro_spec() {
  return {.n_agents = 2, .n_actions = 3, .obs_dim = 3, .state_dim = 2, .episode_limit = 4, .has_action_mask = true};
}

// Synthetic episode with random observations and masks; actions respect masks.
env::EpisodeRecord synthetic_episode(const env::EnvSpec& spec, std::size_t length, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::bernoulli_distribution bit(0.6);
  auto make_step = [&](bool done) {
    env::StepResult s;
    s.obs = Matrix(static_cast<std::size_t>(spec.n_agents), static_cast<std::size_t>(spec.obs_dim));
    for (auto& v : s.obs.values()) v = n(rng);
    s.state.resize(static_cast<std::size_t>(spec.state_dim));
    for (auto& v : s.state) v = n(rng);
    s.reward = n(rng);
    s.done = done;
    s.avail = env::ActionMask(spec.n_agents, spec.n_actions, true);
    if (spec.has_action_mask) {
      for (int a = 0; a < spec.n_agents; ++a) {
        for (int u = 1; u < spec.n_actions; ++u) s.avail.set(a, u, bit(rng));
      }
    }
    return s;
  };
  env::EpisodeRecord rec;
  env::StepResult cur = make_step(false);
  cur.reward = 0.0;
  rec.begin(spec, 0, cur);
  for (std::size_t t = 0; t < length; ++t) {
    std::vector<int> acts;
    for (int a = 0; a < spec.n_agents; ++a) {
      std::vector<int> ok;
      for (int u = 0; u < spec.n_actions; ++u) {
        if (cur.avail(a, u)) ok.push_back(u);
      }
      acts.push_back(ok[std::uniform_int_distribution<std::size_t>(0, ok.size() - 1)(rng)]);
    }
    env::StepResult next = make_step(t + 1 == length);
    rec.append(acts, next);
    cur = next;
  }
  rec.validate();
  return rec;
}

TrainConfig batch_config(std::size_t batch) {
  TrainConfig t;
  t.batch_size = batch;
  return t;
}

ModelConfig micro_model(Algo algo) {
  return {.algo = algo, .spec = micro_spec(), .hidden_dim = 8, .latent_dim = 4, .k = 2, .imag_width = 10,
          .aggregator_hidden = 6, .mixer_embed = 5, .hypernet_hidden = 6};
}

std::vector<const env::EpisodeRecord*> ptrs(const std::vector<env::EpisodeRecord>& eps) {
  std::vector<const env::EpisodeRecord*> out;
  for (const auto& e : eps) out.push_back(&e);
  return out;
}

TEST(ReplayBuffer, FifoEviction) {
  ReplayBuffer buf(3);
  Rng rng(1);
  for (int i = 0; i < 5; ++i) {
    auto e = synthetic_episode(micro_spec(), 2, rng);
    e.seed = static_cast<std::uint64_t>(i);
    buf.push(std::move(e));
  }
  EXPECT_EQ(buf.size(), 3u);
  EXPECT_EQ(buf.inserted(), 5);
  EXPECT_EQ(buf.at(0).seed, 2u);
  EXPECT_EQ(buf.at(2).seed, 4u);
}

TEST(ReplayBuffer, SamplesWithoutReplacement) {
  ReplayBuffer buf(50);
  Rng rng(2);
  for (int i = 0; i < 40; ++i) buf.push(synthetic_episode(micro_spec(), 1, rng));
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = buf.sample(32, rng);
    EXPECT_EQ(std::set<const env::EpisodeRecord*>(s.begin(), s.end()).size(), 32u);
  }
  EXPECT_THROW(buf.sample(41, rng), UsageError);
  EXPECT_THROW(ReplayBuffer(0), UsageError);
}

TEST(Batch, PaddingLayout) {
  Rng rng(3);
  std::vector<env::EpisodeRecord> eps = {synthetic_episode(micro_spec(), 3, rng), synthetic_episode(micro_spec(), 1, rng)};
  const Batch b = Batch::from_episodes(ptrs(eps), 6);
  EXPECT_EQ(b.max_len, 6u);
  EXPECT_EQ(b.valid_steps(), 4u);
  EXPECT_TRUE(b.valid(2, 0));
  EXPECT_FALSE(b.valid(1, 1));
  EXPECT_EQ(b.terminal[2][0], 1);
  EXPECT_EQ(b.terminal[0][1], 1);
  EXPECT_EQ(b.last_actions[0], std::vector<int>(4, -1));
  EXPECT_EQ(b.last_actions[1][0], eps[0].actions[0][0]);
  EXPECT_EQ(b.states[1](1, 0), eps[1].states[1][0]);
  EXPECT_EQ(b.states[4](1, 0), 0.0);
}

TEST(Losses, TdTargetArithmetic) {
  EXPECT_NEAR(td_target(1.0, 0.99, false, 2.0), 2.98, 1e-12);
  EXPECT_EQ(td_target(5.0, 0.99, true, 123.0), 5.0);
}

TEST(Losses, MseCases) {
  const Matrix target{{1.0, -2.0, 0.5}, {3.0, 0.0, 1.0}};
  Matrix off = target;
  for (auto& v : off.values()) v += 0.7;
  EXPECT_EQ(mse(ad::constant(target), ad::constant(target)).item(), 0.0);
  EXPECT_NEAR(mse(ad::constant(off), ad::constant(target)).item(), 0.49, 1e-12);
}

TEST(Losses, BinaryCrossEntropyCases) {
  const Matrix targets{{1.0, 0.0, 1.0, 0.0}};
  const Matrix sure{{50.0, -50.0, 50.0, -50.0}};
  const double at_truth = bce_with_logits(ad::constant(sure), targets).item();
  EXPECT_GT(at_truth, 0.0);
  EXPECT_NEAR(at_truth, -std::log(1.0 - 1e-7), 1e-12);
  EXPECT_NEAR(bce_with_logits(ad::constant(Matrix(1, 4)), targets).item(), std::log(2.0), 1e-12);
}

TEST(Losses, KlTermCases) {
  const imagination::GaussianLatent std_normal{ad::constant(Matrix(1, 1)), ad::constant(Matrix(1, 1))};
  const imagination::GaussianLatent shifted{ad::constant(Matrix{{1.0}}), ad::constant(Matrix(1, 1))};
  EXPECT_EQ(kl_term(std_normal, std_normal, 0.3).item(), 0.0);
  std::vector<double> values;
  for (double alpha : {0.0, 0.3, 1.0}) values.push_back(kl_term(shifted, std_normal, alpha).item());
  EXPECT_DOUBLE_EQ(values[0], 0.5);
  EXPECT_NEAR(values[1], values[0], 1e-12);
  EXPECT_NEAR(values[2], values[0], 1e-12);
}

TEST(Losses, TotalIsSumOfComponents) {
  Rng rng(4);
  std::vector<env::EpisodeRecord> eps = {synthetic_episode(micro_spec(), 4, rng), synthetic_episode(micro_spec(), 3, rng)};
  Networks live = make_networks(micro_model(Algo::kMbvd), 1);
  Networks target = make_networks(micro_model(Algo::kMbvd), 2);
  const LossGraph g = build_loss(live, target, Batch::from_episodes(ptrs(eps)), {}, 99);
  const LossBreakdown& v = g.values;
  EXPECT_GT(v.l_rc, 0.0);
  EXPECT_GT(v.l_rc_prior, 0.0);
  EXPECT_GT(v.l_kl, 0.0);
  EXPECT_GT(v.l_fa, 0.0);
  EXPECT_NEAR(v.total, v.l_rl + v.l_rc + v.l_rc_prior + v.l_kl + v.l_fa, 1e-9);
  EXPECT_NEAR(g.total.item(), v.total, 1e-9);
}

TEST(Losses, MaskFreeEnvironmentHasNoFeasibilityLoss) {
  Rng rng(5);
  env::EnvSpec spec = micro_spec();
  spec.has_action_mask = false;
  std::vector<env::EpisodeRecord> eps = {synthetic_episode(spec, 3, rng), synthetic_episode(spec, 2, rng)};
  ModelConfig mc = micro_model(Algo::kMbvd);
  mc.spec = spec;
  Networks live = make_networks(mc, 1), target = make_networks(mc, 1);
  EXPECT_EQ(build_loss(live, target, Batch::from_episodes(ptrs(eps)), {}, 3).values.l_fa, 0.0);
}

TEST(Losses, AblationsHaveNoImaginationTerms) {
  Rng rng(6);
  std::vector<env::EpisodeRecord> eps = {synthetic_episode(micro_spec(), 4, rng), synthetic_episode(micro_spec(), 2, rng)};
  for (Algo algo : {Algo::kQmixRs, Algo::kQmixLs, Algo::kQmix, Algo::kVdn}) {
    Networks live = make_networks(micro_model(algo), 1), target = make_networks(micro_model(algo), 1);
    const LossBreakdown v = build_loss(live, target, Batch::from_episodes(ptrs(eps)), {}, 3).values;
    EXPECT_EQ(v.l_rc + v.l_rc_prior + v.l_kl + v.l_fa, 0.0) << algo_name(algo);
    EXPECT_EQ(v.total, v.l_rl);
  }
}

TEST(Losses, PaddingStepsChangeNothing) {
  Rng rng(7);
  std::vector<env::EpisodeRecord> eps = {synthetic_episode(micro_spec(), 4, rng), synthetic_episode(micro_spec(), 2, rng),
                                         synthetic_episode(micro_spec(), 1, rng)};
  for (Algo algo : {Algo::kMbvd, Algo::kQmixRs, Algo::kQmixLs, Algo::kQmix, Algo::kVdn}) {
    Networks live = make_networks(micro_model(algo), 1), target = make_networks(micro_model(algo), 2);
    const LossBreakdown a = build_loss(live, target, Batch::from_episodes(ptrs(eps)), {}, 11).values;
    const LossBreakdown b = build_loss(live, target, Batch::from_episodes(ptrs(eps), 9), {}, 11).values;
    EXPECT_NEAR(a.l_rl, b.l_rl, 1e-9) << algo_name(algo);
    EXPECT_NEAR(a.l_rc, b.l_rc, 1e-9);
    EXPECT_NEAR(a.l_rc_prior, b.l_rc_prior, 1e-9);
    EXPECT_NEAR(a.l_kl, b.l_kl, 1e-9);
    EXPECT_NEAR(a.l_fa, b.l_fa, 1e-9);
  }
}

TEST(Losses, RealStateWindowTail) {
  Rng rng(8);
  std::vector<env::EpisodeRecord> eps = {synthetic_episode(micro_spec(), 4, rng)};
  const Batch b = Batch::from_episodes(ptrs(eps));
  const auto w = real_state_window(b, 1, 0, 3);
  ASSERT_EQ(w.size(), 3u);
  for (int j = 0; j < 3; ++j) EXPECT_EQ(w[static_cast<std::size_t>(j)], eps[0].states[static_cast<std::size_t>(2 + j)]);
  // Last step: the final observation then two zero pads.
  const auto tail = real_state_window(b, 3, 0, 3);
  EXPECT_EQ(tail[0], eps[0].states[4]);
  EXPECT_EQ(tail[1], std::vector<double>(2, 0.0));
  EXPECT_EQ(tail[2], std::vector<double>(2, 0.0));
}

// Finite differences of the total objective against backprop, with every
// stop-gradient branch frozen at the base point.
void gradient_check(Algo algo) {
  Rng rng(9);
  std::vector<env::EpisodeRecord> eps = {synthetic_episode(micro_spec(), 4, rng), synthetic_episode(micro_spec(), 3, rng)};
  const Batch batch = Batch::from_episodes(ptrs(eps));
  Networks live = make_networks(micro_model(algo), 3);
  Networks target = make_networks(micro_model(algo), 4);
  StopGradientTape tape;
  nn::ParamList params;
  live.collect(params);
  for (auto* p : params) p->zero_grad();
  ad::backward(build_loss(live, target, batch, {}, 21, &tape).total);
  auto f = [&] {
    ad::NoGradGuard g;
    return build_loss(live, target, batch, {}, 21, &tape).total.item();
  };
  const auto res = testing::check_param_grads(f, params);
  EXPECT_LT(res.max_relative_error, 1e-3) << algo_name(algo) << " worst " << res.worst;
}

TEST(Gradients, TotalLossMbvd) { gradient_check(Algo::kMbvd); }
TEST(Gradients, TotalLossAblations) {
  gradient_check(Algo::kQmixRs);
  gradient_check(Algo::kQmixLs);
  gradient_check(Algo::kVdn);
}

TEST(Optimizer, ClipScalesToExactNorm) {
  ad::Param a("a", Matrix(2, 2)), b("b", Matrix(1, 3));
  a.grad = Matrix{{60.0, 0.0}, {0.0, 0.0}};
  b.grad = Matrix{{0.0, 80.0, 0.0}};
  nn::ParamList params = {&a, &b};
  EXPECT_DOUBLE_EQ(clip_grad_norm(params, 10.0), 100.0);
  EXPECT_NEAR(global_grad_norm(params), 10.0, 1e-12);
  EXPECT_DOUBLE_EQ(a.grad(0, 0), 6.0);
  EXPECT_DOUBLE_EQ(clip_grad_norm(params, 10.0), global_grad_norm(params));
  EXPECT_DOUBLE_EQ(a.grad(0, 0), 6.0);
}

TEST(Optimizer, RmsPropUpdateRule) {
  ad::Param p("p", Matrix{{1.0}});
  p.grad = Matrix{{2.0}};
  RmsProp opt({.lr = 0.1, .alpha = 0.9, .eps = 1e-5});
  opt.step({&p});
  const double v = 0.1 * 4.0;
  EXPECT_NEAR(p.value[0], 1.0 - 0.1 * 2.0 / (std::sqrt(v) + 1e-5), 1e-15);
}

ReplayBuffer micro_buffer(std::size_t n, Rng& rng) {
  ReplayBuffer buf;
  for (std::size_t i = 0; i < n; ++i) buf.push(synthetic_episode(micro_spec(), 1 + i % 4, rng));
  return buf;
}

TEST(Learner, WaitsForEnoughEpisodes) {
  Rng rng(10);
  ReplayBuffer buf = micro_buffer(3, rng);
  Learner l(micro_model(Algo::kMbvd), batch_config(4), 0);
  const Rng before = rng;
  EXPECT_FALSE(l.train_step(buf, rng).has_value());
  EXPECT_EQ(rng, before);
  EXPECT_EQ(l.train_steps(), 0);
}

TEST(Learner, DeterministicSteps) {
  Rng data(11);
  const ReplayBuffer buf = micro_buffer(10, data);
  auto run = [&] {
    Learner l(micro_model(Algo::kMbvd), batch_config(4), 5);
    Rng rng(12);
    for (int i = 0; i < 3; ++i) l.train_step(buf, rng);
    nn::ConstParamList p;
    static_cast<const Learner&>(l).live().collect(p);
    std::vector<Matrix> out;
    for (const auto* q : p) out.push_back(q->value);
    return out;
  };
  EXPECT_EQ(run(), run());
}

TEST(Learner, TargetIsolatedAndSynced) {
  Rng data(13);
  const ReplayBuffer buf = micro_buffer(10, data);
  Learner l(micro_model(Algo::kMbvd), batch_config(4), 5);
  nn::ConstParamList tp;
  static_cast<const Learner&>(l).target().collect(tp);
  std::vector<Matrix> before;
  for (const auto* p : tp) before.push_back(p->value);
  Rng rng(14);
  for (int i = 0; i < 3; ++i) l.train_step(buf, rng);
  for (std::size_t i = 0; i < tp.size(); ++i) {
    EXPECT_EQ(tp[i]->value, before[i]) << tp[i]->name;
    EXPECT_EQ(tp[i]->grad.squared_norm(), 0.0) << tp[i]->name;
  }
  EXPECT_FALSE(l.sync_target(199));
  EXPECT_EQ(tp[0]->value, before[0]);
  EXPECT_TRUE(l.sync_target(200));
  nn::ConstParamList lp;
  static_cast<const Learner&>(l).live().collect(lp);
  for (std::size_t i = 0; i < tp.size(); ++i) EXPECT_EQ(tp[i]->value, lp[i]->value);
}

TEST(Learner, OverfitsFrozenBuffer) {
  Rng data(15);
  const ReplayBuffer buf = micro_buffer(8, data);
  Learner l(micro_model(Algo::kMbvd), batch_config(8), 6);
  Rng rng(16);
  std::vector<double> block;
  double prev = 1e300;
  for (int i = 0; i < 200; ++i) {
    block.push_back(l.train_step(buf, rng)->total);
    if (block.size() == 20) {
      const double m = std::accumulate(block.begin(), block.end(), 0.0) / 20.0;
      EXPECT_LT(m, prev) << "window ending at step " << i;
      prev = m;
      block.clear();
    }
  }
}

TEST(Learner, PaddedQmixMatchesMbvdWithZeroRollout) {
  Rng data(17);
  const ReplayBuffer buf = micro_buffer(10, data);
  ModelConfig q = micro_model(Algo::kQmix);
  q.pad_rollout_cond = true;
  ModelConfig m = micro_model(Algo::kMbvd);
  m.zero_rollout = true;
  Learner lq(q, batch_config(4), 7), lm(m, batch_config(4), 7);
  Rng rq(18), rm(18);
  for (int i = 0; i < 5; ++i) {
    const auto a = lq.train_step(buf, rq);
    const auto b = lm.train_step(buf, rm);
    EXPECT_EQ(a->l_rl, b->l_rl);
    EXPECT_EQ(b->total, b->l_rl);
  }
  nn::ParamList pq, pm;
  lq.live().agent.collect(pq);
  lq.live().mixer.collect(pq);
  lm.live().agent.collect(pm);
  lm.live().mixer.collect(pm);
  ASSERT_EQ(pq.size(), pm.size());
  for (std::size_t i = 0; i < pq.size(); ++i) EXPECT_EQ(pq[i]->value, pm[i]->value) << pq[i]->name;
}

TEST(RunEpisode, RecordsValidEpisodeIndependentOfImagination) {
  env::EnvParams ep;
  ep.name = "predator_prey";
  auto env = env::make_environment(ep);
  ModelConfig mc{.algo = Algo::kMbvd, .spec = env->spec(), .latent_dim = 16};
  Networks with = make_networks(mc, 3);
  mc.algo = Algo::kQmix;
  Networks without = make_networks(mc, 3);
  ReplayBuffer buf;
  for (std::uint64_t s = 0; s < 5; ++s) {
    Rng r1(s), r2(s);
    env::EpisodeRecord a = run_episode(*env, with.agent, 0.3, s, r1);
    env::EpisodeRecord b = run_episode(*env, without.agent, 0.3, s, r2);
    EXPECT_EQ(a, b);
    for (std::size_t t = 0; t < a.length(); ++t) {
      for (int ag = 0; ag < a.spec.n_agents; ++ag) EXPECT_TRUE(a.avail[t](ag, a.actions[t][static_cast<std::size_t>(ag)]));
    }
    const std::size_t before = buf.size();
    buf.push(std::move(a));
    EXPECT_EQ(buf.size(), before + 1);
  }
}

}  // namespace
}  // namespace mbvd::training
