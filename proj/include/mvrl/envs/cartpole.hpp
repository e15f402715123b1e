#pragma once

#include "mvrl/envs/env.hpp"

namespace mvrl {

// Classic cart-pole balancing task, semi-implicit Euler integration.
// Observation is the state (x, x_dot, theta, theta_dot); actions push the
// cart left (0) or right (1). Reward is +1 per non-terminal step.
class CartPole : public Env {
 public:
  static constexpr double kGravity = 9.8;
  static constexpr double kCartMass = 1.0;
  static constexpr double kPoleMass = 0.1;
  static constexpr double kHalfLength = 0.5;
  static constexpr double kForceMag = 10.0;
  static constexpr double kDt = 0.02;
  static constexpr double kThetaLimit = 12.0 * 3.14159265358979323846 / 180.0;
  static constexpr double kXLimit = 2.4;

  explicit CartPole(int max_steps = 200) : max_steps_(max_steps) {}

  StepResult reset(Rng& rng) override;
  StepResult step(int action) override;

  int obs_dim() const override { return 4; }
  int n_actions() const override { return 2; }
  Vec hidden_state() const override { return observation(); }
  double reward_from_observation(const Vec& obs, int action) const override;
  std::unique_ptr<Env> clone() const override { return std::make_unique<CartPole>(*this); }

  Vec observation() const;
  int steps() const { return steps_; }
  int max_steps() const { return max_steps_; }

 private:
  bool out_of_bounds() const;

  double x_ = 0.0, x_dot_ = 0.0, theta_ = 0.0, theta_dot_ = 0.0;
  int steps_ = 0;
  int max_steps_;
  bool done_ = true;
};

}  // namespace mvrl
