#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mvrl/adam.hpp"
#include "mvrl/nets.hpp"
#include "mvrl/rng.hpp"
#include "mvrl/tensor.hpp"

namespace mvrl {

struct MvModelConfig {
  std::vector<int> obs_dims;  // per view, ascending view id
  int n_actions = 2;
  int latent_dim = 16;
  int memory_units = 32;
  std::vector<int> enc_hidden = {64};
  std::vector<int> dec_hidden = {64};
  std::vector<int> prior_hidden = {64};
  bool squared_norms = false;
};

// Latent dynamics model shared across views: one encoder/decoder pair per
// view, a shared recurrent memory over (latent, action), and a shared prior
// head mapping memory to latent-state Gaussian parameters. The initial prior
// is a fixed standard normal and the initial memory is zero.
class MvModel {
 public:
  MvModel(MvModelConfig config, Rng& rng);

  int n_views() const { return static_cast<int>(config_.obs_dims.size()); }
  int latent_dim() const { return config_.latent_dim; }
  int memory_units() const { return config_.memory_units; }
  int n_actions() const { return config_.n_actions; }
  int obs_dim(int view) const { return config_.obs_dims.at(static_cast<std::size_t>(view - 1)); }
  const MvModelConfig& config() const { return config_; }

  Vec initial_memory() const { return Vec::Zero(config_.memory_units); }

  // Posterior parameters q(s | h, o); logvar already clamped.
  std::pair<Vec, Vec> encode(int view, const Vec& h, const Vec& o) const;
  std::pair<Mat, Mat> encode_batch(int view, const Mat& h, const Mat& o) const;

  Vec decode(int view, const Vec& s) const;
  Mat decode_batch(int view, const Mat& s) const { return decoders_[index(view)].forward_plain(s); }

  Vec memory_step(const Vec& s_prev, const Vec& h_prev, int a_prev) const;
  Mat memory_step_batch(const Mat& s, const Mat& h, const Eigen::VectorXi& a) const;

  std::pair<Vec, Vec> prior_params(const Vec& h) const;
  std::pair<Mat, Mat> prior_params_batch(const Mat& h) const;

  std::vector<Tensor*> parameters();

  struct Bound {
    std::vector<BoundMlp> encoders;
    std::vector<BoundMlp> decoders;
    BoundGru memory;
    BoundMlp prior;
  };
  Bound bind(Binder& binder);

  Mlp& encoder_net(int view) { return encoders_[index(view)]; }
  Mlp& decoder_net(int view) { return decoders_[index(view)]; }
  GruCell& memory_cell() { return memory_; }
  Mlp& prior_net() { return prior_; }

 private:
  std::size_t index(int view) const;

  MvModelConfig config_;
  std::vector<Mlp> encoders_;
  std::vector<Mlp> decoders_;
  GruCell memory_;
  Mlp prior_;
};

// Corresponding sequences across views: obs[v][t] is (obs_dim_v x B) and all
// views share the hidden trajectories behind column b.
struct SequenceBatch {
  std::vector<std::vector<Mat>> obs;
  std::vector<Eigen::VectorXi> actions;  // [t], shared
  bool corresponding = true;

  int views() const { return static_cast<int>(obs.size()); }
  int steps() const { return obs.empty() ? 0 : static_cast<int>(obs[0].size()); }
  int batch() const { return steps() == 0 ? 0 : static_cast<int>(obs[0][0].cols()); }
};

struct MvLossGraph {
  ad::Var recon;  // L_r
  ad::Var pred;   // L_p
  ad::Var align;  // L_H (zero constant when N = 1)
  std::vector<double> recon_per_view;
  std::vector<double> pred_per_view;
};

// Builds the filtering graph for every view on one tape and returns the three
// training losses. Norms are per-sample Euclidean norms summed over batch and
// time (squared when configured).
MvLossGraph model_loss_graph(Binder& binder, MvModel& model, const SequenceBatch& batch, Rng& rng);

// Forward-only wrappers.
double loss_reconstruction(MvModel& model, const SequenceBatch& batch, Rng& rng);
double loss_prediction(MvModel& model, const SequenceBatch& batch, Rng& rng);
double loss_alignment(MvModel& model, const SequenceBatch& batch, Rng& rng);

// Single-sample evidence lower bound (reporting metric), mean over the batch.
double elbo(MvModel& model, const SequenceBatch& batch, Rng& rng);
ad::Var elbo_graph(Binder& binder, MvModel& model, const SequenceBatch& batch, Rng& rng);

// Cross-view transformation loss: encode view 1 (posterior mean), decode with
// view i, compare to view i's corresponding observation.
double validate_transform(MvModel& model, const SequenceBatch& paired);
// Same through the memory + prior path (predicted latent of view 1).
double validate_pred_transform(MvModel& model, const SequenceBatch& paired);

using BatchSource = std::function<SequenceBatch(int batch_size, int seq_len, Rng& rng)>;

struct TrainModelConfig {
  long iterations = 2000;  // gradient steps
  int batch_size = 16;
  int seq_len = 25;
  double stepsize = 3e-4;
  // Alternation per training cycle: pred_iters steps on L_p then recon_iters
  // steps on L_r.
  int pred_iters = 20;
  int recon_iters = 10;
  double alignment_weight = 1.0;
  bool alignment_in_both = true;
  int log_every = 20;
  int validate_every = 100;
  int val_batches = 4;
};

struct LossRow {
  long iteration;
  std::string name;
  int view_id;  // 0 = aggregate
  double value;
};

struct TrainModelResult {
  std::vector<LossRow> curves;
};

// Alternating-schedule trainer. val_source may be empty; when present, L_t and
// L_pt are recorded every validate_every steps on held-out batches drawn with
// a fixed seed.
TrainModelResult train_model(MvModel& model, Adam& opt, const BatchSource& train_source,
                             const BatchSource& val_source, const TrainModelConfig& config, Rng& rng);

struct KeyElementReport {
  Mat mean_logvar;    // V x K posterior log-variance per view and latent dim
  Mat mu_distance;    // (V-1) x K cross-view |mu_bar^i - mu_bar^1|; 0 rows if V=1
  std::vector<std::vector<int>> low_variance_dims;  // per view, ascending dim order
  std::vector<int> key_set;                         // low-variance in every view
  Mat decoder_weight_mass;    // V x K column sums of |first-layer weights|
  Mat decoder_grad_saliency;  // V x K mean abs jacobian of reconstruction wrt s
  double percentile = 0.2;
};

KeyElementReport key_element_analysis(MvModel& model, const std::vector<SequenceBatch>& eval_batches,
                                      double percentile = 0.2);

double jaccard(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace mvrl
