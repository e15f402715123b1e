#pragma once

#include <functional>
#include <vector>

#include "mvrl/tensor.hpp"

namespace mvrl {

// One step of a view-tagged history. action is -1 when not yet taken (the
// last entry at decision time).
struct HistoryEntry {
  int view_id;
  Vec observation;
  int action;
};

using History = std::vector<HistoryEntry>;

struct TrajStep {
  Vec hidden;       // s_t, recorded by the harness, never shown to agents
  int view_id;      // i_t
  Vec observation;  // o_t under view i_t
  int action;       // a_t; -1 on the final step
  double reward;    // R(s_t, a_t), computed on the hidden state
};

struct MultiViewTrajectory {
  std::vector<TrajStep> steps;
};

// Component log-densities for the trajectory factorization. Discrete models
// wrap their tables; continuous models their densities.
struct DensityModel {
  std::function<double(const Vec& s1)> log_initial;
  std::function<double(const Vec& s, const Vec& s_prev, int a_prev)> log_transition;
  std::function<double(int view_id, const Vec& obs, const Vec& s)> log_observation;
  std::function<double(int action, const History& history)> log_policy;
};

// log P0(s_1) + sum_t [log P_obs^{i_t}(o_t|s_t) + log P(s_t|s_{t-1},a_{t-1})
// + log pi(a_{t-1}|H_{t-1})]. Throws on any non-finite component, naming the
// term and timestep.
double trajectory_log_density(const MultiViewTrajectory& traj, const DensityModel& model);

// sum_t gamma^t R(s_t, a_t), t zero-based.
double discounted_return(const MultiViewTrajectory& traj, double gamma);

}  // namespace mvrl
