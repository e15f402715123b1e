#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "mvrl/control.hpp"
#include "mvrl/envs/cartpole.hpp"
#include "planner_toys.hpp"
#include "support.hpp"

using namespace mvrl;
using mvrl::testing::random_mat;

namespace {

using mvrl::testing::LinearToyModel;
using mvrl::testing::CartPoleOracleModel;

MultiViewEnv make_single_view_cartpole(std::uint64_t seed, int max_steps = 200) {
  return MultiViewEnv(std::make_unique<CartPole>(max_steps), {{1, ViewKind::identity}},
                      ScheduleMode::per_episode, Rng(seed));
}

}  // namespace

TEST_CASE("dataset is fifo-bounded and validates episodes") {
  ExperienceDataset d(2);
  auto make_ep = [](double tag) {
    EpisodeRecord e;
    e.canonical_obs = {Vec::Constant(1, tag), Vec::Constant(1, tag + 0.5)};
    e.actions = {0};
    e.view_ids = {1, 1};
    return e;
  };
  d.add(make_ep(1));
  d.add(make_ep(2));
  d.add(make_ep(3));
  CHECK(d.episodes() == 2);
  CHECK(d.episode(0).canonical_obs[0](0) == 2.0);
  CHECK(d.total_steps() == 2);

  EpisodeRecord bad;
  bad.canonical_obs = {Vec::Zero(1)};
  bad.actions = {0};
  bad.view_ids = {1};
  CHECK_THROWS_AS(d.add(bad), std::runtime_error);
}

TEST_CASE("collect_random: zero episodes, reproducibility, step-count band") {
  ExperienceDataset empty;
  MultiViewEnv env = make_single_view_cartpole(5, 40);
  Rng arng(6);
  CHECK(collect_random(env, 0, empty, arng) == 0);
  CHECK(empty.episodes() == 0);

  auto run = [](std::uint64_t seed) {
    MultiViewEnv env = make_single_view_cartpole(seed, 40);
    ExperienceDataset d;
    Rng arng(seed + 1);
    long n = collect_random(env, 20, d, arng);
    return std::make_pair(n, d);
  };
  auto [n1, d1] = run(7);
  auto [n2, d2] = run(7);
  CHECK(n1 == n2);
  REQUIRE(d1.episodes() == d2.episodes());
  for (std::size_t i = 0; i < d1.episodes(); ++i) {
    REQUIRE(d1.episode(i).steps() == d2.episode(i).steps());
    for (std::size_t t = 0; t < d1.episode(i).canonical_obs.size(); ++t)
      CHECK((d1.episode(i).canonical_obs[t] - d2.episode(i).canonical_obs[t]).norm() == 0.0);
  }
  // 20 rollouts of a random cart-pole policy, capped at 40 steps each
  CHECK(n1 > 150);
  CHECK(n1 < 800);
}

TEST_CASE("corresponding batch source carries shared actions and per-view dims") {
  std::vector<ViewSpec> specs{{1, ViewKind::identity}, {2, ViewKind::dummy_noise, 2, 0.1}};
  MultiViewEnv env(std::make_unique<CartPole>(40), specs, ScheduleMode::per_episode, Rng(8));
  ExperienceDataset d;
  Rng arng(9);
  collect_random(env, 10, d, arng);
  CorrespondingBatchSource source({&d}, specs, &env.normalizer(), 0);
  Rng brng(10);
  SequenceBatch batch = source(6, 8, brng);
  CHECK(batch.views() == 2);
  CHECK(batch.batch() == 6);
  CHECK(batch.steps() >= 1);
  CHECK(batch.obs[0][0].rows() == 4);
  CHECK(batch.obs[1][0].rows() == 6);
  CHECK(batch.corresponding);
}

TEST_CASE("mpc with horizon 1 and exhaustive candidates is the one-step greedy argmax") {
  Rng rng(11);
  LinearToyModel model(3, rng);
  PlanConfig cfg;
  cfg.horizon = 1;
  cfg.candidates = 64;  // far more than |A| = 2: both actions certainly drawn
  Vec q(2);
  q << 0.3, -0.1;
  Vec w = random_mat(3, 1, rng).col(0);
  cfg.reward = [&](const Vec& obs, int action) { return w.dot(obs) + q(action); };

  for (int trial = 0; trial < 10; ++trial) {
    Vec s0 = random_mat(3, 1, rng).col(0);
    Rng prng(100 + trial);
    int chosen = mpc_act_batch(model, Vec::Zero(3), s0, 1, cfg, 2, prng)(0);
    Vec decoded = model.decode_canonical_batch(s0).col(0);
    int greedy = cfg.reward(decoded, 0) >= cfg.reward(decoded, 1) ? 0 : 1;
    CHECK(chosen == greedy);
  }
}

TEST_CASE("mpc matches exhaustive search on the deterministic linear toy") {
  for (int trial = 0; trial < 20; ++trial) {
    Rng rng(200 + trial);
    LinearToyModel model(3, rng);
    Vec w = random_mat(3, 1, rng).col(0);
    Vec q = random_mat(2, 1, rng).col(0);
    PlanConfig cfg;
    cfg.horizon = 3;
    cfg.candidates = 300;  // all 8 sequences drawn with overwhelming probability
    cfg.reward = [&](const Vec& obs, int action) { return w.dot(obs) + q(action); };
    Vec s0 = random_mat(3, 1, rng).col(0);

    // independent exhaustive enumeration over the 8 action sequences
    double best = -1e300;
    int best_first = -1;
    for (int a0 = 0; a0 < 2; ++a0)
      for (int a1 = 0; a1 < 2; ++a1)
        for (int a2 = 0; a2 < 2; ++a2) {
          Vec s = s0;
          double score = w.dot(model.d_ * s) + q(a0);
          s = model.m_[a0] * s + model.c_[a0];
          score += w.dot(model.d_ * s) + q(a1);
          s = model.m_[a1] * s + model.c_[a1];
          score += w.dot(model.d_ * s) + q(a2);
          if (score > best) {
            best = score;
            best_first = a0;
          }
        }

    Rng prng(300 + trial);
    CHECK(mpc_act_batch(model, Vec::Zero(3), s0, 1, cfg, 2, prng)(0) == best_first);
  }
}

TEST_CASE("mpc with a single candidate returns that sequence's first action") {
  Rng rng(12);
  LinearToyModel model(2, rng);
  PlanConfig cfg;
  cfg.horizon = 4;
  cfg.candidates = 1;
  cfg.reward = [](const Vec&, int) { return -1.0; };
  Vec s0 = random_mat(2, 1, rng).col(0);
  Rng prng(13);
  int chosen = mpc_act_batch(model, Vec::Zero(2), s0, 1, cfg, 2, prng)(0);
  Rng replay(13);
  CHECK(chosen == replay.uniform_int(2));  // first draw of the only candidate
}

TEST_CASE("mpc with the oracle dynamics balances cart-pole") {
  CartPoleOracleModel oracle;
  CartPole reward_env;
  PlanConfig cfg;
  cfg.horizon = 40;
  cfg.candidates = 100;
  cfg.action_repeat = 4;
  cfg.reward = [&](const Vec& obs, int action) {
    return reward_env.reward_from_observation(obs, action);
  };
  auto factory = [](std::uint64_t seed) {
    return std::make_unique<MultiViewEnv>(std::make_unique<CartPole>(200),
                                          std::vector<ViewSpec>{{1, ViewKind::identity}},
                                          ScheduleMode::per_episode, Rng(40000 + seed));
  };
  EvalResult r = evaluate_mpc(oracle, factory, 1, 20, 200, cfg, 2, Rng(14));
  CHECK(r.mean_return >= 195.0);
}

TEST_CASE("mvpt_act uses the view encoder and the greedy policy") {
  Rng rng(15);
  MvModelConfig cfg;
  cfg.obs_dims = {3, 3};
  cfg.latent_dim = 2;
  cfg.memory_units = 3;
  cfg.enc_hidden = {};
  cfg.dec_hidden = {};
  cfg.prior_hidden = {};
  MvModel model(cfg, rng);
  // tie the encoders
  model.encoder_net(2).layers[0].W.value = model.encoder_net(1).layers[0].W.value;
  model.encoder_net(2).layers[0].b.value = model.encoder_net(1).layers[0].b.value;
  PolicyNet policy = PolicyNet::create(2, {4}, 2, rng);

  Rng drng(16);
  Vec h = random_mat(3, 1, drng).col(0);
  Vec obs = random_mat(3, 1, drng).col(0);
  int a1 = mvpt_act(model, policy, h, obs, 1);
  int a2 = mvpt_act(model, policy, h, obs, 2);
  CHECK(a1 == a2);  // identical hidden states and tied encoders
  CHECK(mvpt_act(model, policy, h, obs, 1) == a1);

  // the policy input dimension equals the latent dim, not the obs dim
  CHECK(policy.net.in_dim() == 2);
  CHECK_THROWS_AS(mvpt_act(model, policy, h, obs, 7), std::runtime_error);
}

TEST_CASE("reward evaluator is required for planning") {
  Rng rng(17);
  LinearToyModel model(2, rng);
  PlanConfig cfg;
  cfg.horizon = 2;
  cfg.candidates = 4;
  Rng prng(18);
  CHECK_THROWS_WITH_AS(mpc_act_batch(model, Vec::Zero(2), Vec::Zero(2), 1, cfg, 2, prng),
                       doctest::Contains("reward"), std::runtime_error);
}

TEST_CASE("evaluate_mvpt reproduces step-by-step mvpt_act decisions") {
  Rng rng(60);
  MvModelConfig cfg;
  cfg.obs_dims = {4, 6};
  cfg.latent_dim = 4;
  cfg.memory_units = 6;
  cfg.enc_hidden = {8};
  cfg.dec_hidden = {8};
  cfg.prior_hidden = {8};
  MvModel model(cfg, rng);
  PolicyNet policy = PolicyNet::create(4, {8}, 2, rng);
  std::vector<ViewSpec> specs{{1, ViewKind::identity}, {2, ViewKind::dummy_noise, 2, 0.1}};
  auto factory = [&](std::uint64_t seed) {
    return std::make_unique<MultiViewEnv>(std::make_unique<CartPole>(200), specs,
                                          ScheduleMode::per_episode, Rng(5000 + seed));
  };
  EvalResult via_eval = evaluate_mvpt(model, policy, factory, 1, 1, 200);

  auto env = factory(0);
  env->set_training(false);
  env->pin_view(1);
  MvStep s = env->reset();
  Vec h = model.initial_memory();
  double ret = 0.0;
  for (int t = 0; t < 200 && !s.done; ++t) {
    int a = mvpt_act(model, policy, h, s.observation, 1);
    h = model.memory_step(model.encode(1, h, s.observation).first, h, a);
    s = env->step(a);
    ret += s.reward;
  }
  CHECK(via_eval.mean_return == doctest::Approx(ret));
}
