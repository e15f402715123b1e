#include "mvrl/views.hpp"

#include <cmath>
#include <stdexcept>

namespace mvrl {

ViewKind view_kind_from_string(const std::string& s) {
  if (s == "identity") return ViewKind::identity;
  if (s == "dummy_noise") return ViewKind::dummy_noise;
  if (s == "transpose") return ViewKind::transpose;
  if (s == "hswap") return ViewKind::hswap;
  if (s == "invert") return ViewKind::invert;
  if (s == "mirror") return ViewKind::mirror;
  throw std::runtime_error("unknown view kind '" + s + "'");
}

std::string to_string(ViewKind k) {
  switch (k) {
    case ViewKind::identity: return "identity";
    case ViewKind::dummy_noise: return "dummy_noise";
    case ViewKind::transpose: return "transpose";
    case ViewKind::hswap: return "hswap";
    case ViewKind::invert: return "invert";
    case ViewKind::mirror: return "mirror";
  }
  return "?";
}

void Normalizer::update(const Vec& x) {
  if (frozen_) return;
  if (count_ == 0) {
    mean_ = Vec::Zero(x.size());
    m2_ = Vec::Zero(x.size());
  }
  if (x.size() != mean_.size()) throw std::runtime_error("Normalizer::update: dimension change");
  ++count_;
  Vec delta = x - mean_;
  mean_ += delta / static_cast<double>(count_);
  m2_ += delta.cwiseProduct(x - mean_);
}

Vec Normalizer::normalize(const Vec& x) const {
  if (count_ < 2) return x;
  Vec var = m2_ / static_cast<double>(count_ - 1);
  Vec sd = var.cwiseMax(1e-8).cwiseSqrt();
  return (x - mean_).cwiseQuotient(sd);
}

Vec Normalizer::denormalize(const Vec& x) const {
  if (count_ < 2) return x;
  Vec var = m2_ / static_cast<double>(count_ - 1);
  Vec sd = var.cwiseMax(1e-8).cwiseSqrt();
  return x.cwiseProduct(sd) + mean_;
}

int view_obs_dim(const ViewSpec& spec, int base_dim) {
  return spec.kind == ViewKind::dummy_noise ? base_dim + spec.extra_dims : base_dim;
}

namespace {

Vec grid_transform(const ViewSpec& spec, const Vec& o, int g) {
  if (g <= 0 || o.size() != static_cast<Eigen::Index>(g) * g)
    throw std::runtime_error("apply_view: " + to_string(spec.kind) + " requires a square grid observation");
  Vec out(o.size());
  for (int r = 0; r < g; ++r) {
    for (int c = 0; c < g; ++c) {
      double v = o(r * g + c);
      switch (spec.kind) {
        case ViewKind::transpose:
          // Clockwise 90-degree rotation followed by a horizontal flip is the
          // matrix transpose.
          out(c * g + r) = v;
          break;
        case ViewKind::hswap:
          out(r * g + (c + g / 2) % g) = v;
          break;
        case ViewKind::invert:
          out(r * g + c) = 1.0 - v;
          break;
        case ViewKind::mirror:
          out(r * g + (g - 1 - c)) = v;
          break;
        default:
          throw std::runtime_error("apply_view: not a grid transform");
      }
    }
  }
  return out;
}

}  // namespace

Vec apply_view(const ViewSpec& spec, const Vec& canonical, const Normalizer* normalizer, Rng* rng,
               int grid_size) {
  switch (spec.kind) {
    case ViewKind::identity:
      return canonical;
    case ViewKind::dummy_noise: {
      if (grid_size > 0)
        throw std::runtime_error("apply_view: dummy_noise applies to vector observations only");
      if (!rng) throw std::runtime_error("apply_view: dummy_noise requires an rng");
      Vec base = normalizer ? normalizer->normalize(canonical) : canonical;
      Vec out(base.size() + spec.extra_dims);
      out.head(base.size()) = base;
      // Dummy coordinates are resampled each step, so they carry no signal.
      for (int i = 0; i < spec.extra_dims; ++i) out(base.size() + i) = rng->normal();
      for (Eigen::Index i = 0; i < out.size(); ++i) out(i) += spec.noise_sigma * rng->normal();
      return out;
    }
    default:
      return grid_transform(spec, canonical, grid_size);
  }
}

Vec invert_view(const ViewSpec& spec, const Vec& view_obs, const Normalizer* normalizer,
                int grid_size) {
  switch (spec.kind) {
    case ViewKind::identity:
      return view_obs;
    case ViewKind::dummy_noise: {
      Vec base = view_obs.head(view_obs.size() - spec.extra_dims);
      return normalizer ? normalizer->denormalize(base) : base;
    }
    default:
      // the grid transforms are involutions
      return grid_transform(spec, view_obs, grid_size);
  }
}

ScheduleMode schedule_mode_from_string(const std::string& s) {
  if (s == "per_episode") return ScheduleMode::per_episode;
  if (s == "per_step") return ScheduleMode::per_step;
  throw std::runtime_error("unknown schedule mode '" + s + "'");
}

int schedule_view(ScheduleMode mode, int n_views, long episode_index, long step_index, Rng& rng) {
  if (n_views < 1) throw std::runtime_error("schedule_view: need at least one view");
  if (n_views == 1) return 1;
  if (mode == ScheduleMode::per_episode) return static_cast<int>(episode_index % n_views) + 1;
  (void)step_index;
  return rng.uniform_int(n_views) + 1;
}

MultiViewEnv::MultiViewEnv(std::unique_ptr<Env> base, std::vector<ViewSpec> views, ScheduleMode mode,
                           Rng rng, bool emit_bundle)
    : base_(std::move(base)),
      views_(std::move(views)),
      mode_(mode),
      env_rng_(rng.derive("env")),
      schedule_rng_(rng.derive("schedule")),
      noise_rng_(rng.derive("view-noise")),
      emit_bundle_(emit_bundle) {
  if (views_.empty()) throw std::runtime_error("MultiViewEnv: need at least one view");
  for (std::size_t i = 0; i < views_.size(); ++i) {
    if (views_[i].view_id != static_cast<int>(i) + 1)
      throw std::runtime_error("MultiViewEnv: view ids must be 1..N in order");
    bool grid_kind = views_[i].kind != ViewKind::identity && views_[i].kind != ViewKind::dummy_noise;
    if (grid_kind && !base_->grid_observations())
      throw std::runtime_error("MultiViewEnv: grid transform on vector observations");
    if (views_[i].kind == ViewKind::dummy_noise && base_->grid_observations())
      throw std::runtime_error("MultiViewEnv: dummy_noise on grid observations");
  }
}

int MultiViewEnv::view_dim(int view_id) const {
  return view_obs_dim(spec(view_id), base_->obs_dim());
}

int MultiViewEnv::fused_dim() const {
  int total = 0;
  for (int v = 1; v <= n_views(); ++v) total += view_dim(v);
  return total;
}

void MultiViewEnv::set_training(bool training) {
  training_ = training;
  if (training)
    normalizer_.unfreeze();
  else
    normalizer_.freeze();
}

MvStep MultiViewEnv::reset() {
  StepResult r = base_->reset(env_rng_);
  ++episode_index_;
  step_index_ = 0;
  if (training_) normalizer_.update(r.observation);
  current_view_ = pinned_view_ > 0
                      ? pinned_view_
                      : schedule_view(mode_, n_views(), episode_index_, step_index_, schedule_rng_);
  MvStep out;
  out.view_id = current_view_;
  out.canonical = r.observation;
  out.hidden = base_->hidden_state();
  out.reward = 0.0;
  out.done = false;
  int g = base_->grid_observations() ? base_->grid_size() : 0;
  out.observation = apply_view(spec(current_view_), r.observation, &normalizer_, &noise_rng_, g);
  if (emit_bundle_) {
    out.bundle.reserve(views_.size());
    for (int v = 1; v <= n_views(); ++v)
      out.bundle.push_back(apply_view(spec(v), r.observation, &normalizer_, &noise_rng_, g));
  }
  return out;
}

MvStep MultiViewEnv::step(int action) {
  StepResult r = base_->step(action);
  ++interactions_;
  ++step_index_;
  if (training_) normalizer_.update(r.observation);
  if (pinned_view_ > 0)
    current_view_ = pinned_view_;
  else if (mode_ == ScheduleMode::per_step)
    current_view_ = schedule_view(mode_, n_views(), episode_index_, step_index_, schedule_rng_);
  MvStep out;
  out.view_id = current_view_;
  out.canonical = r.observation;
  out.hidden = base_->hidden_state();
  out.reward = r.reward;
  out.done = r.done;
  int g = base_->grid_observations() ? base_->grid_size() : 0;
  out.observation = apply_view(spec(current_view_), r.observation, &normalizer_, &noise_rng_, g);
  if (emit_bundle_) {
    out.bundle.reserve(views_.size());
    for (int v = 1; v <= n_views(); ++v)
      out.bundle.push_back(apply_view(spec(v), r.observation, &normalizer_, &noise_rng_, g));
  }
  return out;
}

}  // namespace mvrl
