#include "mvrl/envs/gridpong.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mvrl {

GridPong::GridPong(int grid, int max_steps, int score_limit)
    : grid_(grid), max_steps_(max_steps), score_limit_(score_limit) {
  if (grid < 6) throw std::runtime_error("GridPong: grid must be at least 6");
}

StepResult GridPong::reset(Rng& rng) {
  state_.score_left = 0;
  state_.score_right = 0;
  state_.left_paddle = grid_ / 2 - kPaddleHeight / 2;
  state_.right_paddle = grid_ / 2 - kPaddleHeight / 2;
  state_.ball_row = grid_ / 2;
  state_.ball_col = grid_ / 2;
  state_.d_row = rng.uniform_int(3) - 1;
  state_.d_col = rng.uniform_int(2) == 0 ? -1 : 1;
  steps_ = 0;
  done_ = false;
  return {observation(), 0.0, false};
}

void GridPong::serve(int toward_col_dir) {
  state_.ball_row = grid_ / 2;
  state_.ball_col = grid_ / 2;
  state_.d_col = toward_col_dir;
  state_.d_row = (state_.score_left + state_.score_right) % 3 - 1;
}

bool GridPong::paddle_covers(int paddle_top, int row) const {
  return row >= paddle_top && row < paddle_top + kPaddleHeight;
}

StepResult GridPong::step(int action) {
  if (done_) throw std::runtime_error("GridPong::step: episode is done");
  if (action < 0 || action > 2) throw std::runtime_error("GridPong::step: action must be 0, 1, or 2");

  int max_top = grid_ - kPaddleHeight;
  if (action == 0) state_.right_paddle = std::max(0, state_.right_paddle - 1);
  if (action == 2) state_.right_paddle = std::min(max_top, state_.right_paddle + 1);

  // Tracking opponent; only moves on even steps, so rallies can be won.
  if (steps_ % 2 == 0) {
    int center = state_.left_paddle + kPaddleHeight / 2;
    if (state_.ball_row < center)
      state_.left_paddle = std::max(0, state_.left_paddle - 1);
    else if (state_.ball_row > center)
      state_.left_paddle = std::min(max_top, state_.left_paddle + 1);
  }

  int new_row = state_.ball_row + state_.d_row;
  if (new_row < 0) {
    new_row = -new_row;
    state_.d_row = -state_.d_row;
  } else if (new_row > grid_ - 1) {
    new_row = 2 * (grid_ - 1) - new_row;
    state_.d_row = -state_.d_row;
  }
  state_.ball_row = new_row;

  double reward = 0.0;
  int new_col = state_.ball_col + state_.d_col;
  if (new_col <= 0) {
    if (paddle_covers(state_.left_paddle, state_.ball_row)) {
      state_.d_col = 1;
      state_.ball_col = 1;
    } else {
      ++state_.score_right;
      reward = 1.0;
      serve(-1);
    }
  } else if (new_col >= grid_ - 1) {
    if (paddle_covers(state_.right_paddle, state_.ball_row)) {
      state_.d_col = -1;
      state_.ball_col = grid_ - 2;
    } else {
      ++state_.score_left;
      reward = -1.0;
      serve(1);
    }
  } else {
    state_.ball_col = new_col;
  }

  ++steps_;
  done_ = steps_ >= max_steps_ || state_.score_left >= score_limit_ || state_.score_right >= score_limit_;
  return {observation(), reward, done_};
}

Vec GridPong::observation() const {
  Vec o = Vec::Zero(grid_ * grid_);
  auto set = [&](int r, int c) { o(r * grid_ + c) = 1.0; };
  for (int k = 0; k < kPaddleHeight; ++k) {
    set(state_.left_paddle + k, 0);
    set(state_.right_paddle + k, grid_ - 1);
  }
  set(state_.ball_row, state_.ball_col);
  return o;
}

Vec GridPong::hidden_state() const {
  Vec s(8);
  s << state_.ball_row, state_.ball_col, state_.d_row, state_.d_col, state_.left_paddle,
      state_.right_paddle, state_.score_left, state_.score_right;
  return s;
}

void GridPong::set_state_for_test(const State& s) {
  state_ = s;
  steps_ = 0;
  done_ = false;
}

double GridPong::reward_from_observation(const Vec& obs, int /*action*/) const {
  if (obs.size() != grid_ * grid_)
    throw std::runtime_error("GridPong::reward_from_observation: wrong obs size");
  // Dense shaping for planning only: negative row distance between the agent
  // paddle and the ball, both decoded as strongest cells.
  int best_ball_r = 0, best_pad_r = 0;
  double best_ball = -1e300, best_pad = -1e300;
  for (int r = 0; r < grid_; ++r) {
    for (int c = 1; c < grid_ - 1; ++c) {
      double v = obs(r * grid_ + c);
      if (v > best_ball) {
        best_ball = v;
        best_ball_r = r;
      }
    }
    double p = obs(r * grid_ + grid_ - 1);
    if (p > best_pad) {
      best_pad = p;
      best_pad_r = r;
    }
  }
  return -std::abs(static_cast<double>(best_pad_r) - static_cast<double>(best_ball_r));
}

}  // namespace mvrl
