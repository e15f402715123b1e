#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mvrl/control.hpp"
#include "mvrl/mvmodel.hpp"
#include "mvrl/policy.hpp"
#include "mvrl/views.hpp"

namespace mvrl {

struct EnvConfig {
  std::string name = "cartpole";  // cartpole | gridpong
  int max_steps = 200;
  int rollout_max_steps = 40;  // episode cap during model-learning collection
  int grid_size = 16;
  int score_limit = 5;
};

struct ViewConfig {
  std::string kind = "identity";
  int extra_dims = 2;
  double noise_sigma = 0.1;
};

struct ModelSection {
  int latent_dim = 16;
  int memory_units = 32;
  std::vector<int> enc_hidden = {64};
  std::vector<int> dec_hidden = {64};
  std::vector<int> prior_hidden = {64};
  bool squared_norms = false;
  long iterations = 2000;
  int batch_size = 16;
  int seq_len = 25;
  double stepsize = 3e-4;
  int pred_iters = 20;
  int recon_iters = 10;
  double alignment_weight = 1.0;
  bool alignment_in_both = true;
  int log_every = 20;
  int validate_every = 100;
  int val_batches = 4;
  int random_episodes = 100;
  int val_episodes = 20;
};

struct PpoSection {
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
  double kl_stop = 0.05;
  bool adv_norm = true;
  double max_grad_norm = 0.0;
  std::vector<int> hidden = {64, 64};
};

struct PlanSection {
  int horizon = 40;
  int candidates = 100;
  int action_repeat = 4;
  double discount = 1.0;
};

struct MbSection {
  int random_rollouts = 20;
  int max_iter = 60;
  long interaction_budget = 2000;
  int episodes_per_iter = 1;
  long model_steps_initial = 2400;
  long model_steps_per_iter = 600;
  long model_steps_per_iter_late = 300;
  int late_after_iter = 8;
  int eval_every_iters = 3;
};

struct MvptSection {
  int random_rollouts = 20;
  long model_train_steps = 4000;
  long policy_budget = 150000;
  long eval_every = 8192;
  int source_view = 1;
};

struct TrainSection {
  long budget = 200000;
  long eval_every = 4096;
  int eval_episodes = 20;
  double success_threshold = 195.0;
  bool stop_at_success = true;
};

struct ExperimentConfig {
  std::string experiment;  // train-mf | train-mf-independent | train-model | mb-mpc | mvpt | analyze
  EnvConfig env;
  std::vector<ViewConfig> views = {{"identity"}};
  std::string schedule = "per_episode";
  ModelSection model;
  PpoSection ppo;
  PlanSection plan;
  MbSection mb;
  MvptSection mvpt;
  TrainSection train;
  std::uint64_t seed = 0;
  std::string out = "run";
};

// Strict parse: unknown keys anywhere are errors.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& json_text);
std::string config_to_json(const ExperimentConfig& config);

// Derived constructors.
std::vector<ViewSpec> view_specs(const ExperimentConfig& config);
std::unique_ptr<Env> make_base_env(const EnvConfig& env, bool rollout_cap);
std::unique_ptr<MultiViewEnv> make_mv_env(const ExperimentConfig& config, Rng rng, bool rollout_cap,
                                          bool emit_bundle);
MvModelConfig model_config(const ExperimentConfig& config);
TrainModelConfig train_model_config(const ExperimentConfig& config);
PpoConfig ppo_config(const ExperimentConfig& config);
PlanConfig plan_config(const ExperimentConfig& config, const Env& reward_env);

}  // namespace mvrl
