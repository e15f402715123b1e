#pragma once

#include "mvrl/envs/env.hpp"

namespace mvrl {

// Pong on a binary G-by-G grid. The agent drives the right paddle with
// actions {0: up, 1: stay, 2: down}; a built-in tracker drives the left one.
// Points score +1/-1; everything after reset is deterministic, so replaying
// an action sequence reproduces the trajectory exactly.
class GridPong : public Env {
 public:
  struct State {
    int ball_row, ball_col;
    int d_row, d_col;        // d_col is always -1 or +1
    int left_paddle, right_paddle;  // top row of each paddle
    int score_left, score_right;
  };

  explicit GridPong(int grid = 16, int max_steps = 200, int score_limit = 5);

  StepResult reset(Rng& rng) override;
  StepResult step(int action) override;

  int obs_dim() const override { return grid_ * grid_; }
  int n_actions() const override { return 3; }
  Vec hidden_state() const override;
  double reward_from_observation(const Vec& obs, int action) const override;
  bool grid_observations() const override { return true; }
  int grid_size() const override { return grid_; }
  std::unique_ptr<Env> clone() const override { return std::make_unique<GridPong>(*this); }

  Vec observation() const;
  const State& state() const { return state_; }
  void set_state_for_test(const State& s);
  int paddle_height() const { return kPaddleHeight; }

  static constexpr int kPaddleHeight = 3;

 private:
  void serve(int toward_col_dir);
  bool paddle_covers(int paddle_top, int row) const;

  int grid_;
  int max_steps_;
  int score_limit_;
  State state_{};
  int steps_ = 0;
  bool done_ = true;
};

}  // namespace mvrl
