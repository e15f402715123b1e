#include "mvrl/trajectory.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mvrl {

namespace {

double checked(double v, const char* term, std::size_t t) {
  if (!std::isfinite(v))
    throw std::runtime_error(std::string("trajectory_log_density: non-finite ") + term +
                             " term at timestep " + std::to_string(t));
  return v;
}

}  // namespace

double trajectory_log_density(const MultiViewTrajectory& traj, const DensityModel& model) {
  if (traj.steps.empty()) throw std::runtime_error("trajectory_log_density: empty trajectory");
  double total = checked(model.log_initial(traj.steps[0].hidden), "initial-state", 0);
  History history;
  for (std::size_t t = 0; t < traj.steps.size(); ++t) {
    const TrajStep& step = traj.steps[t];
    total += checked(model.log_observation(step.view_id, step.observation, step.hidden),
                     "observation", t);
    if (t > 0) {
      const TrajStep& prev = traj.steps[t - 1];
      total += checked(model.log_transition(step.hidden, prev.hidden, prev.action), "transition", t);
      // H_{t-1}: observations up to t-1 with the pending action masked.
      history.back().action = -1;
      total += checked(model.log_policy(prev.action, history), "policy", t);
      history.back().action = prev.action;
    }
    history.push_back({step.view_id, step.observation, step.action});
  }
  return total;
}

double discounted_return(const MultiViewTrajectory& traj, double gamma) {
  if (gamma < 0.0 || gamma > 1.0) throw std::runtime_error("discounted_return: gamma must be in [0,1]");
  double g = 0.0, w = 1.0;
  for (const TrajStep& s : traj.steps) {
    g += w * s.reward;
    w *= gamma;
  }
  return g;
}

}  // namespace mvrl
