#include "mvrl/harness/config.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "mvrl/envs/cartpole.hpp"
#include "mvrl/envs/gridpong.hpp"

namespace mvrl {

namespace {

using nlohmann::json;

// Reads known keys and rejects everything else.
class StrictObject {
 public:
  StrictObject(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw std::runtime_error("config: " + path_ + " must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw std::runtime_error("config: bad value for " + path_ + "." + key + ": " + e.what());
    }
  }

  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& raw(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key))
        throw std::runtime_error("config: unknown key '" + path_ + "." + key + "'");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void parse_env(const json& j, EnvConfig& out) {
  StrictObject o(j, "env");
  o.get("name", out.name);
  o.get("max_steps", out.max_steps);
  o.get("rollout_max_steps", out.rollout_max_steps);
  o.get("grid_size", out.grid_size);
  o.get("score_limit", out.score_limit);
  o.finish();
  if (out.name != "cartpole" && out.name != "gridpong")
    throw std::runtime_error("config: unknown env.name '" + out.name + "'");
}

void parse_views(const json& j, std::vector<ViewConfig>& out) {
  if (!j.is_array() || j.empty())
    throw std::runtime_error("config: views must be a non-empty array");
  out.clear();
  int i = 0;
  for (const auto& vj : j) {
    StrictObject o(vj, "views[" + std::to_string(i) + "]");
    ViewConfig v;
    o.get("kind", v.kind);
    o.get("extra_dims", v.extra_dims);
    o.get("noise_sigma", v.noise_sigma);
    o.finish();
    view_kind_from_string(v.kind);  // validates
    out.push_back(v);
    ++i;
  }
}

void parse_model(const json& j, ModelSection& out) {
  StrictObject o(j, "model");
  o.get("latent_dim", out.latent_dim);
  o.get("memory_units", out.memory_units);
  o.get("enc_hidden", out.enc_hidden);
  o.get("dec_hidden", out.dec_hidden);
  o.get("prior_hidden", out.prior_hidden);
  o.get("squared_norms", out.squared_norms);
  o.get("iterations", out.iterations);
  o.get("batch_size", out.batch_size);
  o.get("seq_len", out.seq_len);
  o.get("stepsize", out.stepsize);
  o.get("pred_iters", out.pred_iters);
  o.get("recon_iters", out.recon_iters);
  o.get("alignment_weight", out.alignment_weight);
  o.get("alignment_in_both", out.alignment_in_both);
  o.get("log_every", out.log_every);
  o.get("validate_every", out.validate_every);
  o.get("val_batches", out.val_batches);
  o.get("random_episodes", out.random_episodes);
  o.get("val_episodes", out.val_episodes);
  o.finish();
}

void parse_ppo(const json& j, PpoSection& out) {
  StrictObject o(j, "ppo");
  o.get("horizon", out.horizon);
  o.get("stepsize", out.stepsize);
  o.get("epochs", out.epochs);
  o.get("minibatch", out.minibatch);
  o.get("gamma", out.gamma);
  o.get("lambda", out.lambda);
  o.get("actors", out.actors);
  o.get("clip", out.clip);
  o.get("value_coeff", out.value_coeff);
  o.get("entropy_coeff", out.entropy_coeff);
  o.get("kl_stop", out.kl_stop);
  o.get("adv_norm", out.adv_norm);
  o.get("max_grad_norm", out.max_grad_norm);
  o.get("hidden", out.hidden);
  o.finish();
}

void parse_plan(const json& j, PlanSection& out) {
  StrictObject o(j, "plan");
  o.get("horizon", out.horizon);
  o.get("candidates", out.candidates);
  o.get("action_repeat", out.action_repeat);
  o.get("discount", out.discount);
  o.finish();
}

void parse_mb(const json& j, MbSection& out) {
  StrictObject o(j, "mb");
  o.get("random_rollouts", out.random_rollouts);
  o.get("max_iter", out.max_iter);
  o.get("interaction_budget", out.interaction_budget);
  o.get("episodes_per_iter", out.episodes_per_iter);
  o.get("model_steps_initial", out.model_steps_initial);
  o.get("model_steps_per_iter", out.model_steps_per_iter);
  o.get("model_steps_per_iter_late", out.model_steps_per_iter_late);
  o.get("late_after_iter", out.late_after_iter);
  o.get("eval_every_iters", out.eval_every_iters);
  o.finish();
}

void parse_mvpt(const json& j, MvptSection& out) {
  StrictObject o(j, "mvpt");
  o.get("random_rollouts", out.random_rollouts);
  o.get("model_train_steps", out.model_train_steps);
  o.get("policy_budget", out.policy_budget);
  o.get("eval_every", out.eval_every);
  o.get("source_view", out.source_view);
  o.finish();
}

void parse_train(const json& j, TrainSection& out) {
  StrictObject o(j, "train");
  o.get("budget", out.budget);
  o.get("eval_every", out.eval_every);
  o.get("eval_episodes", out.eval_episodes);
  o.get("success_threshold", out.success_threshold);
  o.get("stop_at_success", out.stop_at_success);
  o.finish();
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("config: parse error: ") + e.what());
  }
  ExperimentConfig out;
  StrictObject o(j, "");
  o.get("experiment", out.experiment);
  if (o.has("env")) parse_env(o.raw("env"), out.env);
  if (o.has("views")) parse_views(o.raw("views"), out.views);
  o.get("schedule", out.schedule);
  if (o.has("model")) parse_model(o.raw("model"), out.model);
  if (o.has("ppo")) parse_ppo(o.raw("ppo"), out.ppo);
  if (o.has("plan")) parse_plan(o.raw("plan"), out.plan);
  if (o.has("mb")) parse_mb(o.raw("mb"), out.mb);
  if (o.has("mvpt")) parse_mvpt(o.raw("mvpt"), out.mvpt);
  if (o.has("train")) parse_train(o.raw("train"), out.train);
  o.get("seed", out.seed);
  o.get("out", out.out);
  o.finish();
  schedule_mode_from_string(out.schedule);  // validates
  for (std::size_t i = 0; i < out.views.size(); ++i) {
    ViewKind k = view_kind_from_string(out.views[i].kind);
    bool grid_kind = k != ViewKind::identity && k != ViewKind::dummy_noise;
    if (grid_kind && out.env.name != "gridpong")
      throw std::runtime_error("config: grid transform on a vector-observation env");
    if (k == ViewKind::dummy_noise && out.env.name == "gridpong")
      throw std::runtime_error("config: dummy_noise on a grid-observation env");
  }
  return out;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["experiment"] = c.experiment;
  j["env"] = {{"name", c.env.name},
              {"max_steps", c.env.max_steps},
              {"rollout_max_steps", c.env.rollout_max_steps},
              {"grid_size", c.env.grid_size},
              {"score_limit", c.env.score_limit}};
  j["views"] = json::array();
  for (const auto& v : c.views)
    j["views"].push_back(
        {{"kind", v.kind}, {"extra_dims", v.extra_dims}, {"noise_sigma", v.noise_sigma}});
  j["schedule"] = c.schedule;
  j["model"] = {{"latent_dim", c.model.latent_dim},
                {"memory_units", c.model.memory_units},
                {"enc_hidden", c.model.enc_hidden},
                {"dec_hidden", c.model.dec_hidden},
                {"prior_hidden", c.model.prior_hidden},
                {"squared_norms", c.model.squared_norms},
                {"iterations", c.model.iterations},
                {"batch_size", c.model.batch_size},
                {"seq_len", c.model.seq_len},
                {"stepsize", c.model.stepsize},
                {"pred_iters", c.model.pred_iters},
                {"recon_iters", c.model.recon_iters},
                {"alignment_weight", c.model.alignment_weight},
                {"alignment_in_both", c.model.alignment_in_both},
                {"log_every", c.model.log_every},
                {"validate_every", c.model.validate_every},
                {"val_batches", c.model.val_batches},
                {"random_episodes", c.model.random_episodes},
                {"val_episodes", c.model.val_episodes}};
  j["ppo"] = {{"horizon", c.ppo.horizon},
              {"stepsize", c.ppo.stepsize},
              {"epochs", c.ppo.epochs},
              {"minibatch", c.ppo.minibatch},
              {"gamma", c.ppo.gamma},
              {"lambda", c.ppo.lambda},
              {"actors", c.ppo.actors},
              {"clip", c.ppo.clip},
              {"value_coeff", c.ppo.value_coeff},
              {"entropy_coeff", c.ppo.entropy_coeff},
              {"kl_stop", c.ppo.kl_stop},
              {"adv_norm", c.ppo.adv_norm},
              {"max_grad_norm", c.ppo.max_grad_norm},
              {"hidden", c.ppo.hidden}};
  j["plan"] = {{"horizon", c.plan.horizon},
               {"candidates", c.plan.candidates},
               {"action_repeat", c.plan.action_repeat},
               {"discount", c.plan.discount}};
  j["mb"] = {{"random_rollouts", c.mb.random_rollouts},
             {"max_iter", c.mb.max_iter},
             {"interaction_budget", c.mb.interaction_budget},
             {"episodes_per_iter", c.mb.episodes_per_iter},
             {"model_steps_initial", c.mb.model_steps_initial},
             {"model_steps_per_iter", c.mb.model_steps_per_iter},
             {"model_steps_per_iter_late", c.mb.model_steps_per_iter_late},
             {"late_after_iter", c.mb.late_after_iter},
             {"eval_every_iters", c.mb.eval_every_iters}};
  j["mvpt"] = {{"random_rollouts", c.mvpt.random_rollouts},
               {"model_train_steps", c.mvpt.model_train_steps},
               {"policy_budget", c.mvpt.policy_budget},
               {"eval_every", c.mvpt.eval_every},
               {"source_view", c.mvpt.source_view}};
  j["train"] = {{"budget", c.train.budget},
                {"eval_every", c.train.eval_every},
                {"eval_episodes", c.train.eval_episodes},
                {"success_threshold", c.train.success_threshold},
                {"stop_at_success", c.train.stop_at_success}};
  j["seed"] = c.seed;
  j["out"] = c.out;
  return j.dump(2) + "\n";
}

std::vector<ViewSpec> view_specs(const ExperimentConfig& config) {
  std::vector<ViewSpec> specs;
  for (std::size_t i = 0; i < config.views.size(); ++i) {
    ViewSpec s;
    s.view_id = static_cast<int>(i) + 1;
    s.kind = view_kind_from_string(config.views[i].kind);
    s.extra_dims = config.views[i].extra_dims;
    s.noise_sigma = config.views[i].noise_sigma;
    specs.push_back(s);
  }
  return specs;
}

std::unique_ptr<Env> make_base_env(const EnvConfig& env, bool rollout_cap) {
  int max_steps = rollout_cap ? env.rollout_max_steps : env.max_steps;
  if (env.name == "cartpole") return std::make_unique<CartPole>(max_steps);
  return std::make_unique<GridPong>(env.grid_size, max_steps, env.score_limit);
}

std::unique_ptr<MultiViewEnv> make_mv_env(const ExperimentConfig& config, Rng rng, bool rollout_cap,
                                          bool emit_bundle) {
  return std::make_unique<MultiViewEnv>(make_base_env(config.env, rollout_cap), view_specs(config),
                                        schedule_mode_from_string(config.schedule), rng, emit_bundle);
}

MvModelConfig model_config(const ExperimentConfig& config) {
  MvModelConfig mc;
  auto base = make_base_env(config.env, false);
  auto specs = view_specs(config);
  for (const auto& s : specs) mc.obs_dims.push_back(view_obs_dim(s, base->obs_dim()));
  mc.n_actions = base->n_actions();
  mc.latent_dim = config.model.latent_dim;
  mc.memory_units = config.model.memory_units;
  mc.enc_hidden = config.model.enc_hidden;
  mc.dec_hidden = config.model.dec_hidden;
  mc.prior_hidden = config.model.prior_hidden;
  mc.squared_norms = config.model.squared_norms;
  return mc;
}

TrainModelConfig train_model_config(const ExperimentConfig& config) {
  TrainModelConfig tc;
  tc.iterations = config.model.iterations;
  tc.batch_size = config.model.batch_size;
  tc.seq_len = config.model.seq_len;
  tc.stepsize = config.model.stepsize;
  tc.pred_iters = config.model.pred_iters;
  tc.recon_iters = config.model.recon_iters;
  tc.alignment_weight = config.model.alignment_weight;
  tc.alignment_in_both = config.model.alignment_in_both;
  tc.log_every = config.model.log_every;
  tc.validate_every = config.model.validate_every;
  tc.val_batches = config.model.val_batches;
  return tc;
}

PpoConfig ppo_config(const ExperimentConfig& config) {
  PpoConfig pc;
  pc.horizon = config.ppo.horizon;
  pc.stepsize = config.ppo.stepsize;
  pc.epochs = config.ppo.epochs;
  pc.minibatch = config.ppo.minibatch;
  pc.gamma = config.ppo.gamma;
  pc.lambda = config.ppo.lambda;
  pc.actors = config.ppo.actors;
  pc.clip = config.ppo.clip;
  pc.value_coeff = config.ppo.value_coeff;
  pc.entropy_coeff = config.ppo.entropy_coeff;
  pc.kl_stop = config.ppo.kl_stop;
  pc.adv_norm = config.ppo.adv_norm;
  pc.max_grad_norm = config.ppo.max_grad_norm;
  pc.hidden = config.ppo.hidden;
  return pc;
}

PlanConfig plan_config(const ExperimentConfig& config, const Env& reward_env) {
  PlanConfig pc;
  pc.horizon = config.plan.horizon;
  pc.candidates = config.plan.candidates;
  pc.action_repeat = config.plan.action_repeat;
  pc.discount = config.plan.discount;
  pc.reward = [&reward_env](const Vec& obs, int action) {
    return reward_env.reward_from_observation(obs, action);
  };
  return pc;
}

}  // namespace mvrl
