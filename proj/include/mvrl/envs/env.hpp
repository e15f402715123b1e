#pragma once

#include <memory>

#include "mvrl/rng.hpp"
#include "mvrl/tensor.hpp"

namespace mvrl {

struct StepResult {
  Vec observation;
  double reward = 0.0;
  bool done = false;
};

// Episodic environment with a canonical flat observation. Hidden state is
// exposed for harness recording only; agents never see it.
class Env {
 public:
  virtual ~Env() = default;

  virtual StepResult reset(Rng& rng) = 0;
  virtual StepResult step(int action) = 0;

  virtual int obs_dim() const = 0;
  virtual int n_actions() const = 0;
  virtual Vec hidden_state() const = 0;

  // Planning reward evaluated on a (possibly predicted) canonical observation.
  virtual double reward_from_observation(const Vec& obs, int action) const = 0;

  virtual bool grid_observations() const { return false; }
  virtual int grid_size() const { return 0; }

  virtual std::unique_ptr<Env> clone() const = 0;
};

}  // namespace mvrl
