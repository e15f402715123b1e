#pragma once

#include <cstdint>
#include <functional>
#include <tuple>
#include <vector>

#include "mvrl/adam.hpp"
#include "mvrl/nets.hpp"
#include "mvrl/rng.hpp"
#include "mvrl/tensor.hpp"

namespace mvrl {

// Concatenates per-view observations in ascending view id order. Every view
// must be present (non-empty) at training time.
Vec fuse_observations(const std::vector<Vec>& bundle);

// Categorical policy: an MLP mapping an input vector to action logits.
struct PolicyNet {
  Mlp net;
  int n_actions = 0;

  static PolicyNet create(int in_dim, const std::vector<int>& hidden, int n_actions, Rng& rng,
                          const std::string& name = "policy");
};

struct ActResult {
  int action;
  double log_prob;
};

ActResult act(const PolicyNet& policy, const Vec& input, Rng& rng);
// Argmax of the logits, ties resolved to the lowest action index.
int act_greedy(const PolicyNet& policy, const Vec& input);
Vec action_log_probs(const PolicyNet& policy, const Vec& input);

// ---------------------------------------------------------------------------
// REINFORCE with an observation-history baseline.

// Recurrent return predictor over the history of (observation, previous
// action); one scalar per step.
struct RecurrentBaseline {
  GruCell cell;
  Linear head;
  int obs_dim = 0;
  int n_actions = 0;

  static RecurrentBaseline create(int obs_dim, int n_actions, int units, Rng& rng,
                                  const std::string& name = "baseline");
  void collect(std::vector<Tensor*>& out);

  // Baseline values for one episode (inputs per step, actions taken).
  std::vector<double> values(const std::vector<Vec>& inputs, const std::vector<int>& actions) const;
};

struct ReinforceStep {
  Vec input;
  int action;
  double reward;
};

struct ReinforceEpisode {
  std::vector<ReinforceStep> steps;
};

struct ReinforceStats {
  double mean_return = 0.0;
  double baseline_loss = 0.0;
};

// Gradient-ascent step on (1/M) sum_j sum_t grad log pi(a|input) * (G_t -
// B(H_t)) with G_t the discounted return-to-go; the baseline is then
// regressed to G_t by squared error using baseline_opt.
ReinforceStats reinforce_update(PolicyNet& policy, RecurrentBaseline& baseline, Adam& baseline_opt,
                                const std::vector<ReinforceEpisode>& batch, double eta, double gamma,
                                bool use_baseline = true);

// ---------------------------------------------------------------------------
// Generalized advantage estimation and PPO.

// Standard recursion; terminal[t] marks environment termination after step t,
// next_value bootstraps a truncated final step.
std::vector<double> gae_advantages(const std::vector<double>& rewards, const std::vector<double>& values,
                                   const std::vector<bool>& terminal, double next_value, double gamma,
                                   double lam);

struct PpoConfig {
  int horizon = 2048;
  double stepsize = 3e-4;
  int epochs = 15;
  int minibatch = 1024;
  double gamma = 0.99;
  double lambda = 0.95;
  int actors = 1;
  double clip = 0.2;
  double value_coeff = 0.5;
  double entropy_coeff = 0.0;
  // Early epoch stop when the approximate KL exceeds this; 0 disables.
  double kl_stop = 0.05;
  bool adv_norm = true;
  double max_grad_norm = 0.0;
  std::vector<int> hidden = {64, 64};
};

struct PpoBatch {
  Mat inputs;  // dim x N, one column per step
  Eigen::VectorXi actions;
  Vec old_logp;
  Vec advantages;
  Vec returns;
};

struct PpoUpdateStats {
  int epochs_run = 0;
  double approx_kl = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
};

struct PpoLossParts {
  ad::Var total;
  ad::Var policy_loss;
  ad::Var value_loss;
};

// Clipped-surrogate + value + entropy loss over one minibatch; advantages are
// used as given (normalize beforehand if desired).
PpoLossParts ppo_loss_graph(Binder& binder, PolicyNet& policy, Mlp& value_net, const PpoBatch& minibatch,
                            const PpoConfig& config);

// Clipped-surrogate update over epochs and minibatches; a KL blow-up past
// config.kl_stop stops remaining epochs (reported, not fatal).
PpoUpdateStats ppo_update(PolicyNet& policy, Mlp& value_net, Adam& opt, const PpoBatch& batch,
                          const PpoConfig& config, Rng& shuffle_rng);

// ---------------------------------------------------------------------------
// Episodic adapter + learner loop.

struct AgentEnv {
  int obs_dim = 0;
  int n_actions = 0;
  std::function<Vec()> reset;
  std::function<std::tuple<Vec, double, bool>(int action)> step;
};

using AgentEnvFactory = std::function<AgentEnv(std::uint64_t eval_seed)>;

struct EvalResult {
  double mean_return = 0.0;
  double std_return = 0.0;
};

// Greedy evaluation over fresh environments; deterministic given (params,
// seeds).
EvalResult evaluate_policy(const PolicyNet& policy, const AgentEnvFactory& factory, int episodes,
                           int max_steps, std::uint64_t seed_base = 0);

struct PpoRunHooks {
  std::function<void(long interactions, const EvalResult&)> on_eval;
  std::function<void(long update_index, const PpoUpdateStats&)> on_update;
};

struct PpoRunResult {
  long interactions = 0;
  long interactions_to_success = -1;
  double final_eval = 0.0;
};

class PpoLearner {
 public:
  PpoLearner(int obs_dim, int n_actions, PpoConfig config, Rng rng);

  // Collects one horizon of experience (continuing episodes across calls) and
  // applies one PPO update. Returns the steps consumed.
  long collect_and_update(AgentEnv& env, PpoUpdateStats* stats_out = nullptr);

  PpoRunResult run(AgentEnv env, const AgentEnvFactory& eval_factory, long budget, long eval_every,
                   int eval_episodes, int eval_max_steps, double success_threshold,
                   bool stop_at_success, const PpoRunHooks& hooks = {});

  PolicyNet& policy() { return policy_; }
  Mlp& value_net() { return value_; }
  void collect_params(std::vector<Tensor*>& out);

 private:
  PpoConfig config_;
  PolicyNet policy_;
  Mlp value_;
  Adam opt_;
  Rng act_rng_, shuffle_rng_;
  Vec pending_obs_;
  bool need_reset_ = true;
};

}  // namespace mvrl
