#include "mvrl/mvmodel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

namespace mvrl {

MvModel::MvModel(MvModelConfig config, Rng& rng) : config_(std::move(config)) {
  if (config_.obs_dims.empty()) throw std::runtime_error("MvModel: need at least one view");
  const int k = config_.latent_dim, h = config_.memory_units;
  for (std::size_t v = 0; v < config_.obs_dims.size(); ++v) {
    std::string id = std::to_string(v + 1);
    encoders_.push_back(Mlp::create("enc" + id, config_.obs_dims[v] + h, config_.enc_hidden, 2 * k, rng));
    decoders_.push_back(Mlp::create("dec" + id, k, config_.dec_hidden, config_.obs_dims[v], rng));
  }
  memory_ = GruCell::create("mem", k + config_.n_actions, h, rng);
  prior_ = Mlp::create("prior", h, config_.prior_hidden, 2 * k, rng);
}

std::size_t MvModel::index(int view) const {
  if (view < 1 || view > n_views())
    throw std::runtime_error("MvModel: unknown view " + std::to_string(view));
  return static_cast<std::size_t>(view - 1);
}

std::pair<Vec, Vec> MvModel::encode(int view, const Vec& h, const Vec& o) const {
  auto [mu, lv] = encode_batch(view, h, o);
  return {Vec(mu.col(0)), Vec(lv.col(0))};
}

std::pair<Mat, Mat> MvModel::encode_batch(int view, const Mat& h, const Mat& o) const {
  std::size_t v = index(view);
  if (o.rows() != config_.obs_dims[v])
    throw std::runtime_error("MvModel::encode: observation dim mismatch for view " +
                             std::to_string(view));
  Mat x(o.rows() + h.rows(), o.cols());
  x.topRows(o.rows()) = o;
  x.bottomRows(h.rows()) = h;
  Mat out = encoders_[v].forward_plain(x);
  const int k = config_.latent_dim;
  Mat mu = out.topRows(k);
  Mat lv = out.bottomRows(k).array().max(ad::kLogVarMin).min(ad::kLogVarMax);
  return {mu, lv};
}

Vec MvModel::decode(int view, const Vec& s) const {
  if (s.size() != config_.latent_dim) throw std::runtime_error("MvModel::decode: latent dim mismatch");
  return decoders_[index(view)].forward_plain(s);
}

Vec MvModel::memory_step(const Vec& s_prev, const Vec& h_prev, int a_prev) const {
  Eigen::VectorXi a(1);
  a << a_prev;
  return memory_step_batch(s_prev, h_prev, a);
}

Mat MvModel::memory_step_batch(const Mat& s, const Mat& h, const Eigen::VectorXi& a) const {
  Mat x(s.rows() + config_.n_actions, s.cols());
  x.topRows(s.rows()) = s;
  x.bottomRows(config_.n_actions) = one_hot(a, config_.n_actions);
  return memory_.step_plain(x, h);
}

std::pair<Vec, Vec> MvModel::prior_params(const Vec& h) const {
  auto [mu, lv] = prior_params_batch(h);
  return {Vec(mu.col(0)), Vec(lv.col(0))};
}

std::pair<Mat, Mat> MvModel::prior_params_batch(const Mat& h) const {
  Mat out = prior_.forward_plain(h);
  const int k = config_.latent_dim;
  Mat mu = out.topRows(k);
  Mat lv = out.bottomRows(k).array().max(ad::kLogVarMin).min(ad::kLogVarMax);
  return {mu, lv};
}

std::vector<Tensor*> MvModel::parameters() {
  std::vector<Tensor*> out;
  for (auto& e : encoders_) e.collect(out);
  for (auto& d : decoders_) d.collect(out);
  memory_.collect(out);
  prior_.collect(out);
  return out;
}

MvModel::Bound MvModel::bind(Binder& binder) {
  Bound b;
  for (auto& e : encoders_) b.encoders.push_back(bind_mlp(binder, e));
  for (auto& d : decoders_) b.decoders.push_back(bind_mlp(binder, d));
  b.memory = bind_gru(binder, memory_);
  b.prior = bind_mlp(binder, prior_);
  return b;
}

namespace {

void check_batch(const MvModel& model, const SequenceBatch& batch) {
  if (batch.views() != model.n_views())
    throw std::runtime_error("SequenceBatch: view count mismatch");
  if (batch.steps() == 0) throw std::runtime_error("SequenceBatch: empty");
  if (static_cast<int>(batch.actions.size()) < batch.steps() - 1)
    throw std::runtime_error("SequenceBatch: need an action per non-final step");
}

// Sum of per-sample Euclidean norms (or squared norms) of the columns.
ad::Var norm_sum(ad::Var diff, bool squared) {
  return squared ? ad::sum(ad::square(diff)) : ad::sum(ad::norm2_cols(diff));
}

struct ViewFilter {
  std::vector<ad::Var> mu, logvar, sample;
  std::vector<ad::Var> recon;
  std::vector<ad::Var> prior_mu;  // valid from t = 1
};

// Unrolls the posterior filtering pass for one view over the whole batch.
ViewFilter filter_view(Binder& binder, MvModel::Bound& bound, const MvModel& model,
                       const SequenceBatch& batch, int view_index, Rng& rng, bool want_recon,
                       std::vector<ad::Var>* prior_logvar_out = nullptr) {
  ad::Tape& tape = binder.tape();
  const int k = model.latent_dim();
  const int steps = batch.steps();
  const int b = batch.batch();
  ViewFilter out;
  ad::Var h = tape.constant(Mat::Zero(model.memory_units(), b));
  for (int t = 0; t < steps; ++t) {
    ad::Var obs = tape.constant(batch.obs[static_cast<std::size_t>(view_index)][static_cast<std::size_t>(t)]);
    ad::Var x = ad::concat_rows(obs, h);
    ad::Var enc = bound.encoders[static_cast<std::size_t>(view_index)].forward(x);
    ad::Var mu = ad::slice_rows(enc, 0, k);
    ad::Var lv = ad::clamp(ad::slice_rows(enc, k, k), ad::kLogVarMin, ad::kLogVarMax);
    ad::Var s = ad::reparam_sample(mu, lv, rng);
    out.mu.push_back(mu);
    out.logvar.push_back(lv);
    out.sample.push_back(s);
    if (want_recon)
      out.recon.push_back(bound.decoders[static_cast<std::size_t>(view_index)].forward(s));
    if (t >= 1) {
      ad::Var pr = bound.prior.forward(h);
      out.prior_mu.push_back(ad::slice_rows(pr, 0, k));
      if (prior_logvar_out)
        prior_logvar_out->push_back(ad::clamp(ad::slice_rows(pr, k, k), ad::kLogVarMin, ad::kLogVarMax));
    }
    if (t + 1 < steps) {
      ad::Var act = tape.constant(one_hot(batch.actions[static_cast<std::size_t>(t)], model.n_actions()));
      h = bound.memory.step(ad::concat_rows(s, act), h);
    }
  }
  return out;
}

}  // namespace

MvLossGraph model_loss_graph(Binder& binder, MvModel& model, const SequenceBatch& batch, Rng& rng) {
  check_batch(model, batch);
  if (model.n_views() > 1 && !batch.corresponding)
    throw std::runtime_error("model_loss_graph: corresponding batches required across views");
  ad::Tape& tape = binder.tape();
  const bool squared = model.config().squared_norms;
  MvModel::Bound bound = model.bind(binder);

  MvLossGraph out;
  out.recon = tape.constant_scalar(0.0);
  out.pred = tape.constant_scalar(0.0);
  out.align = tape.constant_scalar(0.0);

  std::vector<std::vector<ad::Var>> mu_bars;  // [view][t], K x 1 batch means
  for (int v = 0; v < model.n_views(); ++v) {
    ViewFilter f = filter_view(binder, bound, model, batch, v, rng, true);
    ad::Var recon_v = tape.constant_scalar(0.0);
    ad::Var pred_v = tape.constant_scalar(0.0);
    std::vector<ad::Var> bars;
    for (int t = 0; t < batch.steps(); ++t) {
      ad::Var obs = tape.constant(batch.obs[static_cast<std::size_t>(v)][static_cast<std::size_t>(t)]);
      recon_v = ad::add(recon_v, norm_sum(ad::sub(f.recon[static_cast<std::size_t>(t)], obs), squared));
      if (t >= 1)
        pred_v = ad::add(pred_v, norm_sum(ad::sub(f.prior_mu[static_cast<std::size_t>(t - 1)],
                                                  f.sample[static_cast<std::size_t>(t)]),
                                          squared));
      bars.push_back(ad::row_mean(f.mu[static_cast<std::size_t>(t)]));
    }
    mu_bars.push_back(std::move(bars));
    out.recon = ad::add(out.recon, recon_v);
    out.pred = ad::add(out.pred, pred_v);
    out.recon_per_view.push_back(recon_v.scalar());
    out.pred_per_view.push_back(pred_v.scalar());
  }

  for (int v = 1; v < model.n_views(); ++v)
    for (int t = 0; t < batch.steps(); ++t)
      out.align = ad::add(out.align,
                          norm_sum(ad::sub(mu_bars[static_cast<std::size_t>(v)][static_cast<std::size_t>(t)],
                                           mu_bars[0][static_cast<std::size_t>(t)]),
                                   squared));
  return out;
}

double loss_reconstruction(MvModel& model, const SequenceBatch& batch, Rng& rng) {
  ad::Tape tape;
  Binder binder(tape);
  return model_loss_graph(binder, model, batch, rng).recon.scalar();
}

double loss_prediction(MvModel& model, const SequenceBatch& batch, Rng& rng) {
  ad::Tape tape;
  Binder binder(tape);
  return model_loss_graph(binder, model, batch, rng).pred.scalar();
}

double loss_alignment(MvModel& model, const SequenceBatch& batch, Rng& rng) {
  ad::Tape tape;
  Binder binder(tape);
  return model_loss_graph(binder, model, batch, rng).align.scalar();
}

ad::Var elbo_graph(Binder& binder, MvModel& model, const SequenceBatch& batch, Rng& rng) {
  check_batch(model, batch);
  ad::Tape& tape = binder.tape();
  MvModel::Bound bound = model.bind(binder);
  const int b = batch.batch();
  ad::Var total = tape.constant_scalar(0.0);
  for (int v = 0; v < model.n_views(); ++v) {
    std::vector<ad::Var> prior_lv;
    ViewFilter f = filter_view(binder, bound, model, batch, v, rng, true, &prior_lv);
    const double d = static_cast<double>(model.obs_dim(v + 1));
    for (int t = 0; t < batch.steps(); ++t) {
      ad::Var obs = tape.constant(batch.obs[static_cast<std::size_t>(v)][static_cast<std::size_t>(t)]);
      ad::Var diff = ad::sub(f.recon[static_cast<std::size_t>(t)], obs);
      // log N(o; recon, I) summed over the batch
      ad::Var ll = ad::add_scalar(ad::scale(ad::sum(ad::square(diff)), -0.5),
                                  -0.5 * d * std::log(2.0 * std::numbers::pi) * b);
      ad::Var kl;
      if (t == 0) {
        ad::Var zero_mu = tape.constant(Mat::Zero(model.latent_dim(), b));
        ad::Var zero_lv = tape.constant(Mat::Zero(model.latent_dim(), b));
        kl = ad::kl_diag_gaussians(f.mu[0], f.logvar[0], zero_mu, zero_lv);
      } else {
        kl = ad::kl_diag_gaussians(f.mu[static_cast<std::size_t>(t)], f.logvar[static_cast<std::size_t>(t)],
                                   f.prior_mu[static_cast<std::size_t>(t - 1)],
                                   prior_lv[static_cast<std::size_t>(t - 1)]);
      }
      total = ad::add(total, ad::sub(ll, kl));
    }
  }
  return ad::scale(total, 1.0 / static_cast<double>(b));
}

double elbo(MvModel& model, const SequenceBatch& batch, Rng& rng) {
  ad::Tape tape;
  Binder binder(tape);
  return elbo_graph(binder, model, batch, rng).scalar();
}

namespace {

double plain_norm_sum(const Mat& diff, bool squared) {
  if (squared) return diff.squaredNorm();
  return diff.colwise().norm().sum();
}

}  // namespace

double validate_transform(MvModel& model, const SequenceBatch& paired) {
  check_batch(model, paired);
  if (model.n_views() < 2) return 0.0;
  if (!paired.corresponding)
    throw std::runtime_error("validate_transform: corresponding batches required");
  const bool squared = model.config().squared_norms;
  Mat h = Mat::Zero(model.memory_units(), paired.batch());
  double total = 0.0;
  for (int t = 0; t < paired.steps(); ++t) {
    auto [mu, lv] = model.encode_batch(1, h, paired.obs[0][static_cast<std::size_t>(t)]);
    for (int v = 2; v <= model.n_views(); ++v) {
      Mat recon = model.decode_batch(v, mu);
      total += plain_norm_sum(recon - paired.obs[static_cast<std::size_t>(v - 1)][static_cast<std::size_t>(t)],
                              squared);
    }
    if (t + 1 < paired.steps())
      h = model.memory_step_batch(mu, h, paired.actions[static_cast<std::size_t>(t)]);
  }
  return total;
}

double validate_pred_transform(MvModel& model, const SequenceBatch& paired) {
  check_batch(model, paired);
  if (model.n_views() < 2) return 0.0;
  if (!paired.corresponding)
    throw std::runtime_error("validate_pred_transform: corresponding batches required");
  const bool squared = model.config().squared_norms;
  Mat h = Mat::Zero(model.memory_units(), paired.batch());
  double total = 0.0;
  for (int t = 0; t < paired.steps(); ++t) {
    if (t >= 1) {
      auto [pm, plv] = model.prior_params_batch(h);
      for (int v = 2; v <= model.n_views(); ++v) {
        Mat recon = model.decode_batch(v, pm);
        total += plain_norm_sum(
            recon - paired.obs[static_cast<std::size_t>(v - 1)][static_cast<std::size_t>(t)], squared);
      }
    }
    auto [mu, lv] = model.encode_batch(1, h, paired.obs[0][static_cast<std::size_t>(t)]);
    if (t + 1 < paired.steps())
      h = model.memory_step_batch(mu, h, paired.actions[static_cast<std::size_t>(t)]);
  }
  return total;
}

TrainModelResult train_model(MvModel& model, Adam& opt, const BatchSource& train_source,
                             const BatchSource& val_source, const TrainModelConfig& config, Rng& rng) {
  TrainModelResult result;
  if (config.iterations == 0) return result;
  Rng batch_rng = rng.derive("model-batches");
  Rng sample_rng = rng.derive("model-reparam");
  const int cycle = config.pred_iters + config.recon_iters;

  auto validate = [&](long iter) {
    if (!val_source) return;
    Rng val_rng = rng.derive("model-val");  // identical batches every time
    double lt = 0.0, lpt = 0.0;
    for (int i = 0; i < config.val_batches; ++i) {
      SequenceBatch vb = val_source(config.batch_size, config.seq_len, val_rng);
      lt += validate_transform(model, vb);
      lpt += validate_pred_transform(model, vb);
    }
    result.curves.push_back({iter, "L_t", 0, lt / config.val_batches});
    result.curves.push_back({iter, "L_pt", 0, lpt / config.val_batches});
  };

  for (long iter = 0; iter < config.iterations; ++iter) {
    SequenceBatch batch = train_source(config.batch_size, config.seq_len, batch_rng);
    bool pred_phase = (iter % cycle) < config.pred_iters;

    ad::Tape tape;
    Binder binder(tape);
    MvLossGraph losses = model_loss_graph(binder, model, batch, sample_rng);
    ad::Var objective = pred_phase ? losses.pred : losses.recon;
    bool use_align = model.n_views() > 1 && (config.alignment_in_both || pred_phase);
    if (use_align && config.alignment_weight != 0.0)
      objective = ad::add(objective, ad::scale(losses.align, config.alignment_weight));
    // Losses are sums over batch and time; normalizing the training objective
    // keeps the gradient scale steady when window lengths vary.
    objective = ad::scale(objective, 1.0 / (static_cast<double>(batch.batch()) * batch.steps()));
    double lr_val = losses.recon.scalar();
    double lp_val = losses.pred.scalar();
    double lh_val = losses.align.scalar();
    if (!std::isfinite(lr_val) || !std::isfinite(lp_val) || !std::isfinite(lh_val))
      throw std::runtime_error("train_model: non-finite loss at iteration " + std::to_string(iter));
    tape.backward(objective);
    opt.step(binder.items());

    if (iter % config.log_every == 0) {
      result.curves.push_back({iter, "L_r", 0, lr_val});
      result.curves.push_back({iter, "L_p", 0, lp_val});
      if (model.n_views() > 1) result.curves.push_back({iter, "L_H", 0, lh_val});
      for (int v = 1; v <= model.n_views(); ++v) {
        result.curves.push_back({iter, "L_r", v, losses.recon_per_view[static_cast<std::size_t>(v - 1)]});
        result.curves.push_back({iter, "L_p", v, losses.pred_per_view[static_cast<std::size_t>(v - 1)]});
      }
    }
    if (iter % config.validate_every == 0) validate(iter);
  }
  validate(config.iterations);
  return result;
}

KeyElementReport key_element_analysis(MvModel& model, const std::vector<SequenceBatch>& eval_batches,
                                      double percentile) {
  if (eval_batches.empty()) throw std::runtime_error("key_element_analysis: need evaluation batches");
  const int k = model.latent_dim();
  const int v_count = model.n_views();
  KeyElementReport report;
  report.percentile = percentile;
  report.mean_logvar = Mat::Zero(v_count, k);
  report.mu_distance = Mat::Zero(std::max(0, v_count - 1), k);
  report.decoder_weight_mass = Mat::Zero(v_count, k);
  report.decoder_grad_saliency = Mat::Zero(v_count, k);

  long logvar_samples = 0;
  long distance_samples = 0;
  std::vector<Mat> saliency_latents;  // posterior means for the jacobian probe

  for (const SequenceBatch& batch : eval_batches) {
    check_batch(model, batch);
    std::vector<Mat> h(static_cast<std::size_t>(v_count),
                       Mat::Zero(model.memory_units(), batch.batch()));
    for (int t = 0; t < batch.steps(); ++t) {
      std::vector<Mat> mus;
      for (int v = 1; v <= v_count; ++v) {
        auto [mu, lv] = model.encode_batch(
            v, h[static_cast<std::size_t>(v - 1)],
            batch.obs[static_cast<std::size_t>(v - 1)][static_cast<std::size_t>(t)]);
        report.mean_logvar.row(v - 1) += lv.rowwise().mean().transpose();
        mus.push_back(mu);
        if (t + 1 < batch.steps())
          h[static_cast<std::size_t>(v - 1)] = model.memory_step_batch(
              mu, h[static_cast<std::size_t>(v - 1)], batch.actions[static_cast<std::size_t>(t)]);
      }
      for (int v = 2; v <= v_count; ++v)
        report.mu_distance.row(v - 2) +=
            (mus[static_cast<std::size_t>(v - 1)].rowwise().mean() - mus[0].rowwise().mean())
                .cwiseAbs()
                .transpose();
      if (t == 0) saliency_latents.push_back(mus[0]);
      ++distance_samples;
    }
    logvar_samples += batch.steps();
  }
  report.mean_logvar /= static_cast<double>(logvar_samples);
  if (v_count > 1) report.mu_distance /= static_cast<double>(distance_samples);

  // Low-variance dims per view, then the cross-view intersection.
  int n_low = std::max(1, static_cast<int>(std::floor(percentile * k + 0.5)));
  std::vector<std::set<int>> low_sets;
  for (int v = 0; v < v_count; ++v) {
    std::vector<int> order(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) order[static_cast<std::size_t>(i)] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return report.mean_logvar(v, a) < report.mean_logvar(v, b);
    });
    std::vector<int> low(order.begin(), order.begin() + n_low);
    std::sort(low.begin(), low.end());
    low_sets.emplace_back(low.begin(), low.end());
    report.low_variance_dims.push_back(std::move(low));
  }
  for (int d = 0; d < k; ++d) {
    bool in_all = true;
    for (const auto& s : low_sets) in_all = in_all && s.count(d) > 0;
    if (in_all) report.key_set.push_back(d);
  }

  // Decoder diagnostics per view and latent dim.
  for (int v = 1; v <= v_count; ++v) {
    const Mat& w1 = model.decoder_net(v).layers.front().W.value;
    report.decoder_weight_mass.row(v - 1) = w1.cwiseAbs().colwise().sum();
    long n_probe = 0;
    for (const Mat& latents : saliency_latents) {
      Eigen::Index cols = std::min<Eigen::Index>(latents.cols(), 16);
      for (Eigen::Index j = 0; j < cols; ++j) {
        Mat jac = model.decoder_net(v).input_jacobian(latents.col(j));
        report.decoder_grad_saliency.row(v - 1) += jac.cwiseAbs().colwise().mean();
        ++n_probe;
      }
    }
    if (n_probe > 0) report.decoder_grad_saliency.row(v - 1) /= static_cast<double>(n_probe);
  }
  return report;
}

double jaccard(const std::vector<int>& a, const std::vector<int>& b) {
  std::set<int> sa(a.begin(), a.end()), sb(b.begin(), b.end()), uni(sa), inter;
  uni.insert(sb.begin(), sb.end());
  for (int x : sa)
    if (sb.count(x)) inter.insert(x);
  if (uni.empty()) return 0.0;
  return static_cast<double>(inter.size()) / static_cast<double>(uni.size());
}

}  // namespace mvrl
