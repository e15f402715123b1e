#include "mvrl/control.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mvrl {

void ExperienceDataset::add(EpisodeRecord ep) {
  if (ep.canonical_obs.size() != ep.actions.size() + 1 ||
      ep.view_ids.size() != ep.canonical_obs.size())
    throw std::runtime_error("ExperienceDataset::add: malformed episode");
  episodes_.push_back(std::move(ep));
  while (episodes_.size() > capacity_) episodes_.pop_front();
}

long ExperienceDataset::total_steps() const {
  long total = 0;
  for (const auto& ep : episodes_) total += ep.steps();
  return total;
}

long collect_random(MultiViewEnv& env, int episodes, ExperienceDataset& out, Rng& action_rng) {
  long before = env.interactions();
  for (int e = 0; e < episodes; ++e) {
    EpisodeRecord rec;
    MvStep s = env.reset();
    rec.canonical_obs.push_back(s.canonical);
    rec.view_ids.push_back(s.view_id);
    while (!s.done) {
      int a = action_rng.uniform_int(env.n_actions());
      s = env.step(a);
      rec.actions.push_back(a);
      rec.canonical_obs.push_back(s.canonical);
      rec.view_ids.push_back(s.view_id);
    }
    out.add(std::move(rec));
  }
  return env.interactions() - before;
}

CorrespondingBatchSource::CorrespondingBatchSource(std::vector<const ExperienceDataset*> pools,
                                                   std::vector<ViewSpec> views,
                                                   const Normalizer* normalizer, int grid_size)
    : pools_(std::move(pools)), views_(std::move(views)), normalizer_(normalizer), grid_size_(grid_size) {
  if (pools_.empty()) throw std::runtime_error("CorrespondingBatchSource: no datasets");
}

SequenceBatch CorrespondingBatchSource::operator()(int batch_size, int seq_len, Rng& rng) const {
  // Candidate episodes across pools, weighted by availability.
  std::vector<const EpisodeRecord*> candidates;
  for (const ExperienceDataset* pool : pools_)
    for (std::size_t i = 0; i < pool->episodes(); ++i) {
      const EpisodeRecord* ep = &pool->episode(i);
      if (ep->steps() >= 1) candidates.push_back(ep);
    }
  if (candidates.empty()) throw std::runtime_error("CorrespondingBatchSource: no usable episodes");

  // Mostly full-length windows (recurrent filtering needs long unrolls), with
  // a fraction of anchor-length windows so short, failure-rich episodes still
  // enter the mix instead of being skipped.
  int longest = 0;
  for (const EpisodeRecord* ep : candidates) longest = std::max(longest, ep->steps());
  int len = std::min(seq_len, longest);
  if (rng.uniform() < 0.2) {
    const EpisodeRecord* anchor =
        candidates[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(candidates.size())))];
    len = std::min(seq_len, anchor->steps());
  }

  std::vector<const EpisodeRecord*> usable;
  for (const EpisodeRecord* ep : candidates)
    if (ep->steps() >= len) usable.push_back(ep);

  SequenceBatch batch;
  batch.obs.assign(views_.size(), {});
  for (auto& per_view : batch.obs) per_view.resize(static_cast<std::size_t>(len));
  batch.actions.assign(static_cast<std::size_t>(len), Eigen::VectorXi(batch_size));
  const Eigen::Index base_dim = candidates.front()->canonical_obs.front().size();
  for (std::size_t v = 0; v < views_.size(); ++v) {
    int dim = view_obs_dim(views_[v], static_cast<int>(base_dim));
    for (int t = 0; t < len; ++t) batch.obs[v][static_cast<std::size_t>(t)] = Mat(dim, batch_size);
  }

  for (int b = 0; b < batch_size; ++b) {
    const EpisodeRecord* ep = usable[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(usable.size())))];
    int start = ep->steps() == len ? 0 : rng.uniform_int(ep->steps() - len + 1);
    for (int t = 0; t < len; ++t) {
      const Vec& canonical = ep->canonical_obs[static_cast<std::size_t>(start + t)];
      for (std::size_t v = 0; v < views_.size(); ++v)
        batch.obs[v][static_cast<std::size_t>(t)].col(b) =
            apply_view(views_[v], canonical, normalizer_, &rng, grid_size_);
      batch.actions[static_cast<std::size_t>(t)](b) = ep->actions[static_cast<std::size_t>(start + t)];
    }
  }
  batch.corresponding = true;
  return batch;
}

// ---------------------------------------------------------------------------

Eigen::VectorXi mpc_act_batch(const PlannerModel& model, const Mat& h, const Mat& s0, int view_id,
                              const PlanConfig& config, int n_actions, Rng& rng) {
  if (!config.reward) throw std::runtime_error("mpc_act: reward evaluator missing");
  if (config.horizon < 1 || config.candidates < 1 || config.action_repeat < 1)
    throw std::runtime_error("mpc_act: horizon, candidates, and action_repeat must be positive");
  const Eigen::Index n_envs = s0.cols();
  const int c = config.candidates;
  const Eigen::Index width = n_envs * c;

  // Candidate action sequences, lowest candidate index wins ties. Each drawn
  // action is held for action_repeat steps.
  const int rep = config.action_repeat;
  const int decisions = (config.horizon + rep - 1) / rep;
  std::vector<Eigen::VectorXi> drawn(static_cast<std::size_t>(decisions), Eigen::VectorXi(width));
  for (int d = 0; d < decisions; ++d)
    for (Eigen::Index w = 0; w < width; ++w)
      drawn[static_cast<std::size_t>(d)](w) = rng.uniform_int(n_actions);
  std::vector<Eigen::VectorXi> plan(static_cast<std::size_t>(config.horizon));
  for (int t = 0; t < config.horizon; ++t)
    plan[static_cast<std::size_t>(t)] = drawn[static_cast<std::size_t>(t / rep)];

  Mat s(s0.rows(), width), hm(h.rows(), width);
  for (Eigen::Index e = 0; e < n_envs; ++e)
    for (int j = 0; j < c; ++j) {
      s.col(e * c + j) = s0.col(e);
      hm.col(e * c + j) = h.col(e);
    }

  auto score_step = [&](const Mat& latents, const Eigen::VectorXi& acts, double disc, Vec& scores) {
    Mat decoded = model.decode_view_batch(view_id, latents);
    for (Eigen::Index w = 0; w < width; ++w) {
      Vec obs = config.canonicalize ? config.canonicalize(decoded.col(w), view_id)
                                    : Vec(decoded.col(w));
      scores(w) += disc * config.reward(obs, acts(w));
    }
  };

  Vec scores = Vec::Zero(width);
  double disc = 1.0;
  score_step(s, plan[0], 1.0, scores);
  for (int t = 1; t < config.horizon; ++t) {
    hm = model.memory_step_batch(s, hm, plan[static_cast<std::size_t>(t - 1)]);
    s = model.predict_latent_batch(hm);
    disc *= config.discount;
    score_step(s, plan[static_cast<std::size_t>(t)], disc, scores);
  }

  Eigen::VectorXi actions(n_envs);
  for (Eigen::Index e = 0; e < n_envs; ++e) {
    int best = 0;
    for (int j = 1; j < c; ++j)
      if (scores(e * c + j) > scores(e * c + best)) best = j;
    actions(e) = plan[0](e * c + best);
  }
  return actions;
}

int mpc_act(const PlannerModel& model, const Vec& h, const Vec& obs, int view_id,
            const PlanConfig& config, int n_actions, Rng& rng, bool sample_latent) {
  auto [mu, lv] = model.encode_batch(view_id, h, obs);
  Mat s0 = mu;
  if (sample_latent) {
    for (Eigen::Index r = 0; r < s0.rows(); ++r)
      s0(r, 0) += std::exp(0.5 * lv(r, 0)) * rng.normal();
  }
  return mpc_act_batch(model, h, s0, view_id, config, n_actions, rng)(0);
}

EvalResult evaluate_mpc(const PlannerModel& model, const MultiViewEnvFactory& factory, int view_id,
                        int episodes, int max_steps, const PlanConfig& config, int n_actions,
                        Rng rng) {
  struct Slot {
    std::unique_ptr<MultiViewEnv> env;
    Vec h;
    Vec obs;
    double ret = 0.0;
    bool active = true;
  };
  std::vector<Slot> slots;
  for (int e = 0; e < episodes; ++e) {
    Slot s;
    s.env = factory(static_cast<std::uint64_t>(e));
    s.env->set_training(false);
    s.env->pin_view(view_id);
    MvStep first = s.env->reset();
    s.h = model.initial_memory();
    s.obs = first.observation;
    slots.push_back(std::move(s));
  }

  for (int t = 0; t < max_steps; ++t) {
    std::vector<int> active;
    for (int e = 0; e < episodes; ++e)
      if (slots[static_cast<std::size_t>(e)].active) active.push_back(e);
    if (active.empty()) break;

    Mat h(model.memory_dim(), static_cast<Eigen::Index>(active.size()));
    Mat obs(slots[static_cast<std::size_t>(active[0])].obs.size(),
            static_cast<Eigen::Index>(active.size()));
    for (std::size_t i = 0; i < active.size(); ++i) {
      h.col(static_cast<Eigen::Index>(i)) = slots[static_cast<std::size_t>(active[i])].h;
      obs.col(static_cast<Eigen::Index>(i)) = slots[static_cast<std::size_t>(active[i])].obs;
    }
    Mat s0 = model.encode_batch(view_id, h, obs).first;  // posterior mean at evaluation
    Eigen::VectorXi actions = mpc_act_batch(model, h, s0, view_id, config, n_actions, rng);
    Mat h_next = model.memory_step_batch(s0, h, actions);
    for (std::size_t i = 0; i < active.size(); ++i) {
      Slot& slot = slots[static_cast<std::size_t>(active[i])];
      MvStep step = slot.env->step(actions(static_cast<Eigen::Index>(i)));
      slot.ret += step.reward;
      slot.h = h_next.col(static_cast<Eigen::Index>(i));
      slot.obs = step.observation;
      if (step.done) slot.active = false;
    }
  }

  double mean = 0.0;
  for (const Slot& s : slots) mean += s.ret;
  mean /= episodes;
  double var = 0.0;
  for (const Slot& s : slots) var += (s.ret - mean) * (s.ret - mean);
  return {mean, std::sqrt(var / episodes)};
}

// ---------------------------------------------------------------------------

namespace {

// One MPC-driven collection episode; latents are sampled during collection.
EpisodeRecord collect_mpc_episode(MultiViewEnv& env, const PlannerModel& model,
                                  const PlanConfig& config, Rng& plan_rng) {
  EpisodeRecord rec;
  MvStep s = env.reset();
  rec.canonical_obs.push_back(s.canonical);
  rec.view_ids.push_back(s.view_id);
  Vec h = model.initial_memory();
  while (!s.done) {
    auto [mu, lv] = model.encode_batch(s.view_id, h, s.observation);
    Mat s0 = mu;
    for (Eigen::Index r = 0; r < s0.rows(); ++r)
      s0(r, 0) += std::exp(0.5 * lv(r, 0)) * plan_rng.normal();
    Eigen::VectorXi a = mpc_act_batch(model, h, s0, s.view_id, config, env.n_actions(), plan_rng);
    h = model.memory_step_batch(s0, h, a).col(0);
    s = env.step(a(0));
    rec.actions.push_back(a(0));
    rec.canonical_obs.push_back(s.canonical);
    rec.view_ids.push_back(s.view_id);
  }
  return rec;
}

std::vector<ViewSpec> env_views(const MultiViewEnv& env) {
  std::vector<ViewSpec> views;
  for (int v = 1; v <= env.n_views(); ++v) views.push_back(env.spec(v));
  return views;
}

}  // namespace

MbResult run_mb_loop(MultiViewEnv& env, const MultiViewEnvFactory& eval_factory, MvModel& model,
                     Adam& opt, const MbConfig& config, Rng rng, const MbHooks& hooks) {
  MbResult result;
  Rng action_rng = rng.derive("mb-random-actions");
  Rng plan_rng = rng.derive("planner");
  Rng train_rng = rng.derive("mb-train");
  Rng eval_rng = rng.derive("mb-eval");

  ExperienceDataset d_rand, d_rl;
  collect_random(env, config.random_rollouts, d_rand, action_rng);

  const int grid = env.base().grid_observations() ? env.base().grid_size() : 0;
  CorrespondingBatchSource source({&d_rand, &d_rl}, env_views(env), &env.normalizer(), grid);
  LearnedPlannerModel planner(model);

  // Plan in the acting view's decoded observations, scored canonically.
  MbConfig cfg = config;
  if (!cfg.plan.canonicalize) {
    std::vector<ViewSpec> views = env_views(env);
    const Normalizer* norm = &env.normalizer();
    cfg.plan.canonicalize = [views, norm, grid](const Vec& obs, int view_id) {
      return invert_view(views.at(static_cast<std::size_t>(view_id - 1)), obs, norm, grid);
    };
  }

  long train_step_offset = 0;
  auto train_steps = [&](long steps) {
    if (steps <= 0) return;
    TrainModelConfig tc = config.train;
    tc.iterations = steps;
    Rng it_rng = train_rng.derive(train_step_offset);
    TrainModelResult tr = train_model(model, opt, source, {}, tc, it_rng);
    for (auto& row : tr.curves) row.iteration += train_step_offset;
    train_step_offset += steps;
    if (hooks.on_losses) hooks.on_losses(tr.curves);
  };

  auto evaluate_all = [&](long at_interactions) {
    std::vector<PerViewEval> evals;
    for (int v = 1; v <= env.n_views(); ++v) {
      EvalResult r = evaluate_mpc(planner, eval_factory, v, config.eval_episodes,
                                  config.eval_max_steps, cfg.plan, env.n_actions(),
                                  eval_rng.derive(static_cast<std::uint64_t>(v)));
      evals.push_back({v, r});
    }
    if (hooks.on_eval) hooks.on_eval(at_interactions, evals);
    double mean = 0.0;
    for (const auto& e : evals) mean += e.result.mean_return;
    mean /= evals.size();
    if (mean >= config.success_threshold && result.interactions_to_success < 0)
      result.interactions_to_success = at_interactions;
    return evals;
  };

  train_steps(config.model_steps_initial);

  long last_eval_at = -1;
  for (int iter = 0; iter < config.max_iter; ++iter) {
    if (env.interactions() >= config.interaction_budget) break;
    for (int e = 0; e < config.episodes_per_iter; ++e)
      d_rl.add(collect_mpc_episode(env, planner, cfg.plan, plan_rng));
    train_steps(iter < config.late_after_iter ? config.model_steps_per_iter
                                              : config.model_steps_per_iter_late);
    if (iter % config.eval_every_iters == config.eval_every_iters - 1) {
      result.final_eval = evaluate_all(env.interactions());
      last_eval_at = env.interactions();
      if (config.stop_at_success && result.interactions_to_success >= 0) break;
    }
  }
  if (last_eval_at != env.interactions()) result.final_eval = evaluate_all(env.interactions());
  result.interactions = env.interactions();
  return result;
}

// ---------------------------------------------------------------------------

int mvpt_act(const MvModel& model, const PolicyNet& policy, const Vec& h, const Vec& obs,
             int view_id) {
  auto [mu, lv] = model.encode(view_id, h, obs);
  return act_greedy(policy, mu);
}

EvalResult evaluate_mvpt(const MvModel& model, const PolicyNet& policy,
                         const MultiViewEnvFactory& factory, int view_id, int episodes,
                         int max_steps) {
  std::vector<double> returns;
  for (int e = 0; e < episodes; ++e) {
    auto env = factory(static_cast<std::uint64_t>(e));
    env->set_training(false);
    env->pin_view(view_id);
    MvStep s = env->reset();
    Vec h = model.initial_memory();
    double ret = 0.0;
    for (int t = 0; t < max_steps && !s.done; ++t) {
      auto [mu, lv] = model.encode(view_id, h, s.observation);
      int a = act_greedy(policy, mu);
      h = model.memory_step(mu, h, a);
      s = env->step(a);
      ret += s.reward;
    }
    returns.push_back(ret);
  }
  double mean = std::accumulate(returns.begin(), returns.end(), 0.0) / episodes;
  double var = 0.0;
  for (double r : returns) var += (r - mean) * (r - mean);
  return {mean, std::sqrt(var / episodes)};
}

MvptResult mvpt_train(MultiViewEnv& collect_env, MultiViewEnv& policy_env,
                      const MultiViewEnvFactory& eval_factory, MvModel& model, PpoLearner& learner,
                      const MvptConfig& config, Rng rng, const MvptHooks& hooks) {
  MvptResult result;
  Rng action_rng = rng.derive("mvpt-random-actions");
  Rng train_rng = rng.derive("mvpt-train");
  Rng latent_rng_store = rng.derive("mvpt-latent");

  // Phase 1: model learning on corresponding data from all views.
  ExperienceDataset d_rand;
  result.model_interactions = collect_random(collect_env, config.random_rollouts, d_rand, action_rng);
  CorrespondingBatchSource source({&d_rand}, env_views(collect_env), &collect_env.normalizer(),
                                  collect_env.base().grid_observations()
                                      ? collect_env.base().grid_size()
                                      : 0);
  {
    Adam opt(AdamConfig{.stepsize = config.train.stepsize});
    TrainModelConfig tc = config.train;
    tc.iterations = config.model_train_steps;
    TrainModelResult tr = train_model(model, opt, source, {}, tc, train_rng);
    if (hooks.on_losses) hooks.on_losses(tr.curves);
  }

  // Phase 2: PPO on latent states inferred from the source view. The policy
  // sees sampled posteriors during training and means at evaluation.
  MultiViewEnv& env = policy_env;
  env.pin_view(config.source_view);
  auto h_state = std::make_shared<Vec>(model.initial_memory());
  auto prev_latent = std::make_shared<Vec>(Vec::Zero(model.latent_dim()));
  auto latent_rng = std::make_shared<Rng>(latent_rng_store);
  AgentEnv latent_env;
  latent_env.obs_dim = model.latent_dim();
  latent_env.n_actions = env.n_actions();
  latent_env.reset = [&env, &model, h_state, prev_latent, latent_rng, source_view = config.source_view]() {
    MvStep s = env.reset();
    *h_state = model.initial_memory();
    auto [mu, lv] = model.encode(source_view, *h_state, s.observation);
    Vec sample = mu;
    for (Eigen::Index r = 0; r < sample.size(); ++r)
      sample(r) += std::exp(0.5 * lv(r)) * latent_rng->normal();
    *prev_latent = sample;
    return sample;
  };
  latent_env.step = [&env, &model, h_state, prev_latent, latent_rng,
                     source_view = config.source_view](int action) {
    *h_state = model.memory_step(*prev_latent, *h_state, action);
    MvStep s = env.step(action);
    auto [mu, lv] = model.encode(source_view, *h_state, s.observation);
    Vec sample = mu;
    for (Eigen::Index r = 0; r < sample.size(); ++r)
      sample(r) += std::exp(0.5 * lv(r)) * latent_rng->normal();
    *prev_latent = sample;
    return std::make_tuple(sample, s.reward, s.done);
  };

  // Greedy latent evaluation in the source view mirrors mvpt_act.
  auto eval_adapter = [&model, &eval_factory, source_view = config.source_view,
                       max_steps = config.eval_max_steps](std::uint64_t seed) {
    auto holder = std::make_shared<std::unique_ptr<MultiViewEnv>>((nullptr));
    auto h = std::make_shared<Vec>(model.initial_memory());
    auto mu_state = std::make_shared<Vec>(Vec::Zero(model.latent_dim()));
    AgentEnv a;
    a.obs_dim = model.latent_dim();
    a.n_actions = 0;
    auto factory_copy = eval_factory;
    a.reset = [holder, h, mu_state, factory_copy, seed, source_view, &model]() {
      *holder = factory_copy(seed);
      (*holder)->set_training(false);
      (*holder)->pin_view(source_view);
      MvStep s = (*holder)->reset();
      *h = model.initial_memory();
      *mu_state = model.encode(source_view, *h, s.observation).first;
      return *mu_state;
    };
    a.step = [holder, h, mu_state, source_view, &model](int action) {
      *h = model.memory_step(*mu_state, *h, action);
      MvStep s = (*holder)->step(action);
      *mu_state = model.encode(source_view, *h, s.observation).first;
      return std::make_tuple(*mu_state, s.reward, s.done);
    };
    (void)max_steps;
    return a;
  };

  PpoRunHooks run_hooks;
  run_hooks.on_eval = [&](long interactions, const EvalResult& ev) {
    if (hooks.on_eval) hooks.on_eval(interactions, config.source_view, ev);
  };
  PpoRunResult pr = learner.run(latent_env, eval_adapter, config.policy_budget, config.eval_every,
                                config.eval_episodes, config.eval_max_steps,
                                config.success_threshold, config.stop_at_success, run_hooks);
  result.policy_interactions = pr.interactions;
  result.interactions_to_success = pr.interactions_to_success;

  for (int v = 1; v <= env.n_views(); ++v) {
    EvalResult ev = evaluate_mvpt(model, learner.policy(), eval_factory, v, config.eval_episodes,
                                  config.eval_max_steps);
    result.final_eval.push_back({v, ev});
    if (hooks.on_eval) hooks.on_eval(pr.interactions, v, ev);
  }
  return result;
}

}  // namespace mvrl
