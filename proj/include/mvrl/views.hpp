#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mvrl/envs/env.hpp"
#include "mvrl/rng.hpp"
#include "mvrl/tensor.hpp"

namespace mvrl {

enum class ViewKind { identity, dummy_noise, transpose, hswap, invert, mirror };

ViewKind view_kind_from_string(const std::string& s);
std::string to_string(ViewKind k);

// Declarative observation model: a synthetic transform of the canonical
// observation. dummy_noise applies to vector observations only; the image
// transforms apply to square binary grids only.
struct ViewSpec {
  int view_id = 1;  // 1-based, unique
  ViewKind kind = ViewKind::identity;
  int extra_dims = 2;        // dummy_noise
  double noise_sigma = 0.1;  // std after observation normalization
};

// Streaming per-coordinate mean/std (Welford). Frozen at evaluation time.
class Normalizer {
 public:
  void update(const Vec& x);
  Vec normalize(const Vec& x) const;
  Vec denormalize(const Vec& x) const;
  void freeze() { frozen_ = true; }
  void unfreeze() { frozen_ = false; }
  bool frozen() const { return frozen_; }
  long count() const { return count_; }

 private:
  Vec mean_, m2_;
  long count_ = 0;
  bool frozen_ = false;
};

int view_obs_dim(const ViewSpec& spec, int base_dim);

// Applies one observation model. The normalizer and rng are only consulted by
// dummy_noise; grid transforms need the grid size. Throws on a transform /
// observation kind mismatch.
Vec apply_view(const ViewSpec& spec, const Vec& canonical, const Normalizer* normalizer, Rng* rng,
               int grid_size);

// Maps a view observation back into canonical coordinates. Grid transforms
// are involutions and invert exactly; dummy_noise drops the dummy dimensions
// and denormalizes (the additive noise is irrecoverable).
Vec invert_view(const ViewSpec& spec, const Vec& view_obs, const Normalizer* normalizer,
                int grid_size);

enum class ScheduleMode { per_episode, per_step };

ScheduleMode schedule_mode_from_string(const std::string& s);

// Returns the scheduled view id in {1..n_views}. In per-episode mode the view
// is constant within an episode and cycles across episodes; in per-step mode
// it is uniform each step.
int schedule_view(ScheduleMode mode, int n_views, long episode_index, long step_index, Rng& rng);

struct MvStep {
  int view_id = 1;
  Vec observation;            // scheduled view's observation
  std::vector<Vec> bundle;    // one observation per view (filled when enabled)
  Vec canonical;              // untransformed observation
  Vec hidden;                 // hidden state, recorded for the harness
  double reward = 0.0;
  bool done = false;
};

// Wraps a base environment with N observation models over the shared hidden
// dynamics. One step of the wrapper is one environment interaction.
class MultiViewEnv {
 public:
  MultiViewEnv(std::unique_ptr<Env> base, std::vector<ViewSpec> views, ScheduleMode mode, Rng rng,
               bool emit_bundle = false);

  MvStep reset();
  MvStep step(int action);

  int n_views() const { return static_cast<int>(views_.size()); }
  int n_actions() const { return base_->n_actions(); }
  int base_obs_dim() const { return base_->obs_dim(); }
  int view_dim(int view_id) const;
  int fused_dim() const;
  const ViewSpec& spec(int view_id) const { return views_.at(static_cast<std::size_t>(view_id - 1)); }
  const Env& base() const { return *base_; }

  // Training mode updates normalizers; evaluation freezes them.
  void set_training(bool training);

  // Pins the schedule to one view (used by per-view evaluation); 0 restores
  // the configured schedule.
  void pin_view(int view_id) { pinned_view_ = view_id; }

  void set_emit_bundle(bool emit) { emit_bundle_ = emit; }

  long interactions() const { return interactions_; }
  long episodes() const { return episode_index_; }
  const Normalizer& normalizer() const { return normalizer_; }
  // Installs a normalizer snapshot (evaluation envs share the training
  // env's statistics).
  void set_normalizer(const Normalizer& n) { normalizer_ = n; }

 private:
  std::unique_ptr<Env> base_;
  std::vector<ViewSpec> views_;
  ScheduleMode mode_;
  Rng env_rng_, schedule_rng_, noise_rng_;
  Normalizer normalizer_;
  bool emit_bundle_;
  bool training_ = true;
  int pinned_view_ = 0;
  long episode_index_ = -1;
  long step_index_ = 0;
  long interactions_ = 0;
  int current_view_ = 1;
};

}  // namespace mvrl
