#include "mvrl/policy.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace mvrl {

Vec fuse_observations(const std::vector<Vec>& bundle) {
  if (bundle.empty()) throw std::runtime_error("fuse_observations: empty bundle");
  Eigen::Index total = 0;
  for (std::size_t v = 0; v < bundle.size(); ++v) {
    if (bundle[v].size() == 0)
      throw std::runtime_error("fuse_observations: missing view " + std::to_string(v + 1));
    total += bundle[v].size();
  }
  Vec out(total);
  Eigen::Index at = 0;
  for (const Vec& o : bundle) {
    out.segment(at, o.size()) = o;
    at += o.size();
  }
  return out;
}

PolicyNet PolicyNet::create(int in_dim, const std::vector<int>& hidden, int n_actions, Rng& rng,
                            const std::string& name) {
  return PolicyNet{Mlp::create(name, in_dim, hidden, n_actions, rng), n_actions};
}

Vec action_log_probs(const PolicyNet& policy, const Vec& input) {
  Vec logits = policy.net.forward_plain(input);
  double m = logits.maxCoeff();
  double lse = m + std::log((logits.array() - m).exp().sum());
  return logits.array() - lse;
}

ActResult act(const PolicyNet& policy, const Vec& input, Rng& rng) {
  Vec logp = action_log_probs(policy, input);
  double u = rng.uniform();
  double acc = 0.0;
  int action = policy.n_actions - 1;
  for (int a = 0; a < policy.n_actions; ++a) {
    acc += std::exp(logp(a));
    if (u < acc) {
      action = a;
      break;
    }
  }
  return {action, logp(action)};
}

int act_greedy(const PolicyNet& policy, const Vec& input) {
  Vec logits = policy.net.forward_plain(input);
  int best = 0;
  for (int a = 1; a < policy.n_actions; ++a)
    if (logits(a) > logits(best)) best = a;  // ties stay at the lowest index
  return best;
}

// ---------------------------------------------------------------------------

RecurrentBaseline RecurrentBaseline::create(int obs_dim, int n_actions, int units, Rng& rng,
                                            const std::string& name) {
  RecurrentBaseline b;
  b.cell = GruCell::create(name + ".gru", obs_dim + n_actions, units, rng);
  b.head = make_linear(name + ".head", units, 1, rng);
  b.obs_dim = obs_dim;
  b.n_actions = n_actions;
  return b;
}

void RecurrentBaseline::collect(std::vector<Tensor*>& out) {
  cell.collect(out);
  out.push_back(&head.W);
  out.push_back(&head.b);
}

namespace {

// Step input: observation stacked on the one-hot of the previous action
// (zeros at t=0, matching a history whose last action is absent).
Mat baseline_input(const RecurrentBaseline& b, const Vec& obs, int prev_action) {
  Mat x = Mat::Zero(b.obs_dim + b.n_actions, 1);
  x.topRows(obs.size()).col(0) = obs;
  if (prev_action >= 0) x(obs.size() + prev_action, 0) = 1.0;
  return x;
}

}  // namespace

std::vector<double> RecurrentBaseline::values(const std::vector<Vec>& inputs,
                                              const std::vector<int>& actions) const {
  std::vector<double> out;
  Mat h = Mat::Zero(cell.units(), 1);
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    int prev = t == 0 ? -1 : actions[t - 1];
    h = cell.step_plain(baseline_input(*this, inputs[t], prev), h);
    out.push_back((head.W.value * h + head.b.value)(0, 0));
  }
  return out;
}

ReinforceStats reinforce_update(PolicyNet& policy, RecurrentBaseline& baseline, Adam& baseline_opt,
                                const std::vector<ReinforceEpisode>& batch, double eta, double gamma,
                                bool use_baseline) {
  if (batch.empty()) throw std::runtime_error("reinforce_update: empty batch");
  const double inv_m = 1.0 / static_cast<double>(batch.size());

  // Return-to-go and baseline values, flattened over all steps.
  std::size_t total_steps = 0;
  for (const auto& ep : batch) total_steps += ep.steps.size();
  Mat inputs(policy.net.in_dim(), total_steps);
  Eigen::VectorXi actions(total_steps);
  Vec weights(total_steps);
  Vec targets(total_steps);
  std::vector<std::vector<double>> all_values(batch.size());

  std::size_t col = 0;
  double return_sum = 0.0;
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const auto& ep = batch[j];
    std::vector<Vec> obs;
    std::vector<int> acts;
    for (const auto& s : ep.steps) {
      obs.push_back(s.input);
      acts.push_back(s.action);
    }
    std::vector<double> values =
        use_baseline ? baseline.values(obs, acts) : std::vector<double>(ep.steps.size(), 0.0);
    all_values[j] = values;
    double g = 0.0;
    std::vector<double> rtg(ep.steps.size());
    for (std::size_t t = ep.steps.size(); t-- > 0;) {
      g = ep.steps[t].reward + gamma * g;
      rtg[t] = g;
    }
    return_sum += rtg.empty() ? 0.0 : rtg[0];
    for (std::size_t t = 0; t < ep.steps.size(); ++t) {
      inputs.col(col) = ep.steps[t].input;
      actions(col) = ep.steps[t].action;
      targets(col) = rtg[t];
      weights(col) = (rtg[t] - values[t]) * inv_m;
      ++col;
    }
  }

  // Policy ascent per the plain Monte-Carlo update rule.
  {
    ad::Tape tape;
    Binder binder(tape);
    BoundMlp bound = bind_mlp(binder, policy.net);
    ad::Var logp = ad::log_softmax_cols(bound.forward(tape.constant(inputs)));
    ad::Var picked = ad::select_rows(logp, actions);
    ad::Var objective = ad::sum(ad::mul(picked, tape.constant(weights.transpose())));
    tape.backward(objective);
    Adam::sgd_ascent(binder.items(), eta);
  }

  // Baseline regression toward the return-to-go.
  double baseline_loss = 0.0;
  if (use_baseline) {
    ad::Tape tape;
    Binder binder(tape);
    BoundGru cell = bind_gru(binder, baseline.cell);
    ad::Var head_w = binder.bind(baseline.head.W);
    ad::Var head_b = binder.bind(baseline.head.b);
    std::vector<ad::Var> errs;
    for (const auto& ep : batch) {
      ad::Var h = tape.constant(Mat::Zero(baseline.cell.units(), 1));
      double g = 0.0;
      std::vector<double> rtg(ep.steps.size());
      for (std::size_t t = ep.steps.size(); t-- > 0;) {
        g = ep.steps[t].reward + gamma * g;
        rtg[t] = g;
      }
      for (std::size_t t = 0; t < ep.steps.size(); ++t) {
        int prev = t == 0 ? -1 : ep.steps[t - 1].action;
        h = cell.step(tape.constant(baseline_input(baseline, ep.steps[t].input, prev)), h);
        ad::Var v = ad::add_col(ad::matmul(head_w, h), head_b);
        errs.push_back(ad::square(ad::add_scalar(v, -rtg[t])));
      }
    }
    ad::Var loss = errs.front();
    for (std::size_t i = 1; i < errs.size(); ++i) loss = ad::add(loss, errs[i]);
    loss = ad::scale(loss, 1.0 / static_cast<double>(errs.size()));
    tape.backward(loss);
    baseline_loss = loss.scalar();
    baseline_opt.step(binder.items());
  }

  return {return_sum * inv_m, baseline_loss};
}

// ---------------------------------------------------------------------------

std::vector<double> gae_advantages(const std::vector<double>& rewards, const std::vector<double>& values,
                                   const std::vector<bool>& terminal, double next_value, double gamma,
                                   double lam) {
  if (rewards.size() != values.size() || rewards.size() != terminal.size())
    throw std::runtime_error("gae_advantages: length mismatch");
  std::vector<double> adv(rewards.size());
  double acc = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    double v_next = t + 1 < rewards.size() ? values[t + 1] : next_value;
    double nonterminal = terminal[t] ? 0.0 : 1.0;
    double delta = rewards[t] + gamma * v_next * nonterminal - values[t];
    acc = delta + gamma * lam * nonterminal * acc;
    adv[t] = acc;
  }
  return adv;
}

namespace {

Mat gather_cols(const Mat& m, const std::vector<int>& idx) {
  Mat out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = m.col(idx[j]);
  return out;
}

}  // namespace

PpoLossParts ppo_loss_graph(Binder& binder, PolicyNet& policy, Mlp& value_net, const PpoBatch& minibatch,
                            const PpoConfig& config) {
  ad::Tape& tape = binder.tape();
  BoundMlp pol = bind_mlp(binder, policy.net);
  BoundMlp val = bind_mlp(binder, value_net);
  ad::Var in = tape.constant(minibatch.inputs);
  ad::Var logp_all = ad::log_softmax_cols(pol.forward(in));
  ad::Var logp = ad::select_rows(logp_all, minibatch.actions);
  ad::Var ratio = ad::exp_(ad::sub(logp, tape.constant(minibatch.old_logp.transpose())));
  ad::Var adv_c = tape.constant(minibatch.advantages.transpose());
  ad::Var surr = ad::min_(ad::mul(ratio, adv_c),
                          ad::mul(ad::clamp(ratio, 1.0 - config.clip, 1.0 + config.clip), adv_c));
  ad::Var policy_loss = ad::neg(ad::mean_all(surr));
  ad::Var v = val.forward(in);
  ad::Var value_loss = ad::mean_all(ad::square(ad::sub(v, tape.constant(minibatch.returns.transpose()))));
  ad::Var loss = ad::add(policy_loss, ad::scale(value_loss, config.value_coeff));
  if (config.entropy_coeff != 0.0) {
    ad::Var ent = ad::neg(ad::mean_all(ad::col_sum(ad::mul(ad::exp_(logp_all), logp_all))));
    loss = ad::sub(loss, ad::scale(ent, config.entropy_coeff));
  }
  return {loss, policy_loss, value_loss};
}

PpoUpdateStats ppo_update(PolicyNet& policy, Mlp& value_net, Adam& opt, const PpoBatch& batch,
                          const PpoConfig& config, Rng& shuffle_rng) {
  const Eigen::Index n = batch.inputs.cols();
  if (batch.actions.size() != n || batch.old_logp.size() != n || batch.advantages.size() != n ||
      batch.returns.size() != n)
    throw std::runtime_error("ppo_update: batch field lengths disagree");

  Vec adv = batch.advantages;
  if (config.adv_norm && n > 1) {
    double mean = adv.mean();
    double sd = std::sqrt((adv.array() - mean).square().sum() / static_cast<double>(n - 1));
    adv = (adv.array() - mean) / std::max(sd, 1e-8);
  }

  PpoUpdateStats stats;
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    // Fisher-Yates with our own rng keeps runs reproducible.
    for (int i = static_cast<int>(n) - 1; i > 0; --i)
      std::swap(order[static_cast<std::size_t>(i)],
                order[static_cast<std::size_t>(shuffle_rng.uniform_int(i + 1))]);

    for (Eigen::Index start = 0; start < n; start += config.minibatch) {
      Eigen::Index len = std::min<Eigen::Index>(config.minibatch, n - start);
      std::vector<int> idx(order.begin() + start, order.begin() + start + len);
      PpoBatch mb;
      mb.inputs = gather_cols(batch.inputs, idx);
      mb.actions.resize(len);
      mb.old_logp.resize(len);
      mb.advantages.resize(len);
      mb.returns.resize(len);
      for (Eigen::Index j = 0; j < len; ++j) {
        mb.actions(j) = batch.actions(idx[static_cast<std::size_t>(j)]);
        mb.old_logp(j) = batch.old_logp(idx[static_cast<std::size_t>(j)]);
        mb.advantages(j) = adv(idx[static_cast<std::size_t>(j)]);
        mb.returns(j) = batch.returns(idx[static_cast<std::size_t>(j)]);
      }

      ad::Tape tape;
      Binder binder(tape);
      PpoLossParts parts = ppo_loss_graph(binder, policy, value_net, mb, config);
      tape.backward(parts.total);
      stats.policy_loss = parts.policy_loss.scalar();
      stats.value_loss = parts.value_loss.scalar();
      opt.step(binder.items());
    }
    stats.epochs_run = epoch + 1;

    // Approximate KL over the full batch after this epoch.
    double kl = 0.0;
    {
      Mat logits = policy.net.forward_plain(batch.inputs);
      for (Eigen::Index j = 0; j < n; ++j) {
        double m = logits.col(j).maxCoeff();
        double lse = m + std::log((logits.col(j).array() - m).exp().sum());
        kl += batch.old_logp(j) - (logits(batch.actions(j), j) - lse);
      }
      kl /= static_cast<double>(n);
    }
    stats.approx_kl = kl;
    if (config.kl_stop > 0.0 && kl > config.kl_stop) break;
  }
  return stats;
}

// ---------------------------------------------------------------------------

EvalResult evaluate_policy(const PolicyNet& policy, const AgentEnvFactory& factory, int episodes,
                           int max_steps, std::uint64_t seed_base) {
  std::vector<double> returns;
  for (int e = 0; e < episodes; ++e) {
    AgentEnv env = factory(seed_base + static_cast<std::uint64_t>(e));
    Vec obs = env.reset();
    double ret = 0.0;
    for (int t = 0; t < max_steps; ++t) {
      auto [next, reward, done] = env.step(act_greedy(policy, obs));
      ret += reward;
      if (done) break;
      obs = next;
    }
    returns.push_back(ret);
  }
  double mean = std::accumulate(returns.begin(), returns.end(), 0.0) / returns.size();
  double var = 0.0;
  for (double r : returns) var += (r - mean) * (r - mean);
  var /= returns.size();
  return {mean, std::sqrt(var)};
}

PpoLearner::PpoLearner(int obs_dim, int n_actions, PpoConfig config, Rng rng)
    : config_(std::move(config)),
      policy_(),
      value_(),
      opt_(AdamConfig{.stepsize = config_.stepsize, .clip_global_norm = config_.max_grad_norm}),
      act_rng_(rng.derive("ppo-act")),
      shuffle_rng_(rng.derive("ppo-shuffle")) {
  Rng init = rng.derive("policy-init");
  policy_ = PolicyNet::create(obs_dim, config_.hidden, n_actions, init);
  value_ = Mlp::create("value", obs_dim, config_.hidden, 1, init);
}

void PpoLearner::collect_params(std::vector<Tensor*>& out) {
  policy_.net.collect(out);
  value_.collect(out);
}

long PpoLearner::collect_and_update(AgentEnv& env, PpoUpdateStats* stats_out) {
  const int h = config_.horizon;
  Mat inputs(env.obs_dim, h);
  Eigen::VectorXi actions(h);
  Vec old_logp(h);
  std::vector<double> rewards(static_cast<std::size_t>(h));
  std::vector<double> values(static_cast<std::size_t>(h));
  std::vector<bool> terminal(static_cast<std::size_t>(h));
  Vec next_obs_final;

  for (int t = 0; t < h; ++t) {
    if (need_reset_) {
      pending_obs_ = env.reset();
      need_reset_ = false;
    }
    ActResult a = act(policy_, pending_obs_, act_rng_);
    inputs.col(t) = pending_obs_;
    actions(t) = a.action;
    old_logp(t) = a.log_prob;
    auto [next, reward, done] = env.step(a.action);
    rewards[static_cast<std::size_t>(t)] = reward;
    terminal[static_cast<std::size_t>(t)] = done;
    if (done)
      need_reset_ = true;
    else
      pending_obs_ = next;
    if (t == h - 1) next_obs_final = done ? Vec() : next;
  }

  Mat value_preds = value_.forward_plain(inputs);
  for (int t = 0; t < h; ++t) values[static_cast<std::size_t>(t)] = value_preds(0, t);
  double next_value = 0.0;
  if (next_obs_final.size() > 0) next_value = value_.forward_plain(next_obs_final)(0, 0);

  std::vector<double> adv = gae_advantages(rewards, values, terminal, next_value, config_.gamma,
                                           config_.lambda);
  PpoBatch batch;
  batch.inputs = std::move(inputs);
  batch.actions = std::move(actions);
  batch.old_logp = std::move(old_logp);
  batch.advantages = Eigen::Map<const Vec>(adv.data(), static_cast<Eigen::Index>(adv.size()));
  batch.returns = batch.advantages +
                  Eigen::Map<const Vec>(values.data(), static_cast<Eigen::Index>(values.size()));

  PpoUpdateStats stats = ppo_update(policy_, value_, opt_, batch, config_, shuffle_rng_);
  if (stats_out) *stats_out = stats;
  return h;
}

PpoRunResult PpoLearner::run(AgentEnv env, const AgentEnvFactory& eval_factory, long budget,
                             long eval_every, int eval_episodes, int eval_max_steps,
                             double success_threshold, bool stop_at_success,
                             const PpoRunHooks& hooks) {
  PpoRunResult result;
  long next_eval = eval_every;
  long update_index = 0;
  need_reset_ = true;

  while (result.interactions < budget) {
    PpoUpdateStats stats;
    result.interactions += collect_and_update(env, &stats);
    if (hooks.on_update) hooks.on_update(update_index, stats);
    ++update_index;

    while (result.interactions >= next_eval) {
      EvalResult ev = evaluate_policy(policy_, eval_factory, eval_episodes, eval_max_steps);
      result.final_eval = ev.mean_return;
      if (hooks.on_eval) hooks.on_eval(result.interactions, ev);
      if (ev.mean_return >= success_threshold && result.interactions_to_success < 0)
        result.interactions_to_success = result.interactions;
      next_eval += eval_every;
      if (stop_at_success && result.interactions_to_success >= 0) return result;
    }
  }
  return result;
}

}  // namespace mvrl
