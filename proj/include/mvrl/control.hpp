#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <vector>

#include "mvrl/mvmodel.hpp"
#include "mvrl/policy.hpp"
#include "mvrl/views.hpp"

namespace mvrl {

// One episode of canonical observations (length n+1, terminal included),
// actions (length n), and the scheduled view id per step.
struct EpisodeRecord {
  std::vector<Vec> canonical_obs;
  std::vector<int> actions;
  std::vector<int> view_ids;

  int steps() const { return static_cast<int>(actions.size()); }
};

// Capacity-bounded FIFO pool of episodes.
class ExperienceDataset {
 public:
  explicit ExperienceDataset(std::size_t capacity_episodes = 100000)
      : capacity_(capacity_episodes) {}

  void add(EpisodeRecord ep);
  std::size_t episodes() const { return episodes_.size(); }
  long total_steps() const;
  const EpisodeRecord& episode(std::size_t i) const { return episodes_.at(i); }

 private:
  std::deque<EpisodeRecord> episodes_;
  std::size_t capacity_;
};

// Uniform-random-action episodes appended to the dataset; returns environment
// interactions consumed.
long collect_random(MultiViewEnv& env, int episodes, ExperienceDataset& out, Rng& action_rng);

// Synthesizes corresponding sequence batches by replaying stored canonical
// observations through every view's transform (dummy noise is resampled, so
// pairs share hidden trajectories, not noise).
class CorrespondingBatchSource {
 public:
  CorrespondingBatchSource(std::vector<const ExperienceDataset*> pools, std::vector<ViewSpec> views,
                           const Normalizer* normalizer, int grid_size);

  SequenceBatch operator()(int batch_size, int seq_len, Rng& rng) const;

 private:
  std::vector<const ExperienceDataset*> pools_;
  std::vector<ViewSpec> views_;
  const Normalizer* normalizer_;
  int grid_size_;
};

// ---------------------------------------------------------------------------
// Planning.

// Model surface the planner rolls candidates through; the learned model and
// the test oracles both implement it.
class PlannerModel {
 public:
  virtual ~PlannerModel() = default;
  virtual int latent_dim() const = 0;
  virtual int memory_dim() const = 0;
  virtual Vec initial_memory() const { return Vec::Zero(memory_dim()); }
  // Posterior parameters (mu, logvar) of the latent given memory and a
  // view observation.
  virtual std::pair<Mat, Mat> encode_batch(int view, const Mat& h, const Mat& obs) const = 0;
  virtual Mat memory_step_batch(const Mat& s, const Mat& h, const Eigen::VectorXi& a) const = 0;
  virtual Mat predict_latent_batch(const Mat& h) const = 0;
  virtual Mat decode_canonical_batch(const Mat& s) const = 0;
  // Decoder of the acting view; canonical by default.
  virtual Mat decode_view_batch(int /*view*/, const Mat& s) const { return decode_canonical_batch(s); }
};

class LearnedPlannerModel : public PlannerModel {
 public:
  explicit LearnedPlannerModel(const MvModel& model) : model_(&model) {}
  int latent_dim() const override { return model_->latent_dim(); }
  int memory_dim() const override { return model_->memory_units(); }
  std::pair<Mat, Mat> encode_batch(int view, const Mat& h, const Mat& obs) const override {
    return model_->encode_batch(view, h, obs);
  }
  Mat memory_step_batch(const Mat& s, const Mat& h, const Eigen::VectorXi& a) const override {
    return model_->memory_step_batch(s, h, a);
  }
  Mat predict_latent_batch(const Mat& h) const override { return model_->prior_params_batch(h).first; }
  Mat decode_canonical_batch(const Mat& s) const override { return model_->decode_batch(1, s); }
  Mat decode_view_batch(int view, const Mat& s) const override { return model_->decode_batch(view, s); }

 private:
  const MvModel* model_;
};

struct PlanConfig {
  int horizon = 16;
  int candidates = 200;
  double discount = 1.0;
  // Candidates hold each sampled action for this many steps. Values above 1
  // concentrate the sequence space so a best-of-C search stays informative
  // over horizons long enough to see slow drift.
  int action_repeat = 1;
  // Canonical-view reward evaluator; predicted observations are mapped into
  // canonical coordinates before scoring.
  std::function<double(const Vec& obs, int action)> reward;
  // Maps an acting-view observation into canonical coordinates (identity when
  // absent, which is right for canonical-view planning).
  std::function<Vec(const Vec& view_obs, int view_id)> canonicalize;
};

// Random-shooting action selection from current latents s0 (one column per
// decision); candidate rollouts use the prior mean and the acting view's
// decoder, ties go to the lowest-index candidate. Returns the first action of
// the best sequence per column.
Eigen::VectorXi mpc_act_batch(const PlannerModel& model, const Mat& h, const Mat& s0, int view_id,
                              const PlanConfig& config, int n_actions, Rng& rng);

// Single-decision form: encodes obs under view_id (sampling the latent when
// sample_latent, else using the posterior mean) and plans from it.
int mpc_act(const PlannerModel& model, const Vec& h, const Vec& obs, int view_id,
            const PlanConfig& config, int n_actions, Rng& rng, bool sample_latent = true);

using MultiViewEnvFactory = std::function<std::unique_ptr<MultiViewEnv>(std::uint64_t seed)>;

// Greedy lockstep evaluation of MPC control in one view.
EvalResult evaluate_mpc(const PlannerModel& model, const MultiViewEnvFactory& factory, int view_id,
                        int episodes, int max_steps, const PlanConfig& config, int n_actions,
                        Rng rng);

// ---------------------------------------------------------------------------
// Model-based loop (MPC) and cross-view policy transfer.

struct MbConfig {
  int random_rollouts = 20;
  int max_iter = 60;
  long interaction_budget = 2000;
  int episodes_per_iter = 1;
  long model_steps_initial = 2400;
  long model_steps_per_iter = 600;
  // Gentler refreshes late in the run keep a working model from churning.
  long model_steps_per_iter_late = 300;
  int late_after_iter = 8;
  int eval_every_iters = 3;
  int eval_episodes = 20;
  int eval_max_steps = 200;
  double success_threshold = 195.0;
  bool stop_at_success = true;
  PlanConfig plan;
  TrainModelConfig train;
};

struct PerViewEval {
  int view_id;
  EvalResult result;
};

struct MbHooks {
  std::function<void(long interactions, const std::vector<PerViewEval>&)> on_eval;
  std::function<void(const std::vector<LossRow>&)> on_losses;
};

struct MbResult {
  long interactions = 0;
  long interactions_to_success = -1;
  std::vector<PerViewEval> final_eval;
};

// Algorithm: gather random data, then alternate model training with
// MPC-driven collection, evaluating greedily per view on a cadence.
MbResult run_mb_loop(MultiViewEnv& env, const MultiViewEnvFactory& eval_factory, MvModel& model,
                     Adam& opt, const MbConfig& config, Rng rng, const MbHooks& hooks = {});

// ---------------------------------------------------------------------------

struct MvptConfig {
  int random_rollouts = 20;
  long model_train_steps = 3000;
  TrainModelConfig train;
  PpoConfig ppo;
  long policy_budget = 150000;
  long eval_every = 8192;
  int eval_episodes = 20;
  int eval_max_steps = 200;
  double success_threshold = 195.0;
  bool stop_at_success = true;
  int source_view = 1;
};

struct MvptHooks {
  std::function<void(long policy_interactions, int view_id, const EvalResult&)> on_eval;
  std::function<void(const std::vector<LossRow>&)> on_losses;
};

struct MvptResult {
  long model_interactions = 0;   // canonical steps consumed for model data
  long policy_interactions = 0;  // source-view steps consumed by the policy
  long interactions_to_success = -1;
  std::vector<PerViewEval> final_eval;  // greedy transfer returns, every view
};

// Trains the model on corresponding data from all views (collect_env, short
// rollouts), then trains a PPO policy on latent states inferred from the
// source view (policy_env, full episodes). Acting in any view goes through
// that view's encoder (posterior mean) into the shared policy.
MvptResult mvpt_train(MultiViewEnv& collect_env, MultiViewEnv& policy_env,
                      const MultiViewEnvFactory& eval_factory, MvModel& model, PpoLearner& learner,
                      const MvptConfig& config, Rng rng, const MvptHooks& hooks = {});

int mvpt_act(const MvModel& model, const PolicyNet& policy, const Vec& h, const Vec& obs, int view_id);

// Greedy evaluation of the transferred policy acting in one view.
EvalResult evaluate_mvpt(const MvModel& model, const PolicyNet& policy,
                         const MultiViewEnvFactory& factory, int view_id, int episodes,
                         int max_steps);

}  // namespace mvrl
