#include "mvrl/envs/cartpole.hpp"

#include <cmath>
#include <stdexcept>

namespace mvrl {

StepResult CartPole::reset(Rng& rng) {
  x_ = rng.uniform(-0.05, 0.05);
  x_dot_ = rng.uniform(-0.05, 0.05);
  theta_ = rng.uniform(-0.05, 0.05);
  theta_dot_ = rng.uniform(-0.05, 0.05);
  steps_ = 0;
  done_ = false;
  return {observation(), 0.0, false};
}

StepResult CartPole::step(int action) {
  if (done_) throw std::runtime_error("CartPole::step: episode is done");
  if (action != 0 && action != 1) throw std::runtime_error("CartPole::step: action must be 0 or 1");

  double force = action == 1 ? kForceMag : -kForceMag;
  double cos_t = std::cos(theta_);
  double sin_t = std::sin(theta_);
  double total_mass = kCartMass + kPoleMass;
  double polemass_length = kPoleMass * kHalfLength;

  double temp = (force + polemass_length * theta_dot_ * theta_dot_ * sin_t) / total_mass;
  double theta_acc = (kGravity * sin_t - cos_t * temp) /
                     (kHalfLength * (4.0 / 3.0 - kPoleMass * cos_t * cos_t / total_mass));
  double x_acc = temp - polemass_length * theta_acc * cos_t / total_mass;

  x_dot_ += kDt * x_acc;
  x_ += kDt * x_dot_;
  theta_dot_ += kDt * theta_acc;
  theta_ += kDt * theta_dot_;
  ++steps_;

  bool failed = out_of_bounds();
  done_ = failed || steps_ >= max_steps_;
  double reward = failed ? 0.0 : 1.0;
  return {observation(), reward, done_};
}

Vec CartPole::observation() const {
  Vec o(4);
  o << x_, x_dot_, theta_, theta_dot_;
  return o;
}

bool CartPole::out_of_bounds() const {
  return std::abs(theta_) > kThetaLimit || std::abs(x_) > kXLimit;
}

double CartPole::reward_from_observation(const Vec& obs, int /*action*/) const {
  if (obs.size() != 4) throw std::runtime_error("CartPole::reward_from_observation: need 4-dim obs");
  return (std::abs(obs(2)) <= kThetaLimit && std::abs(obs(0)) <= kXLimit) ? 1.0 : 0.0;
}

}  // namespace mvrl
