#pragma once

#include <string>
#include <vector>

#include "mvrl/adam.hpp"
#include "mvrl/autodiff.hpp"
#include "mvrl/rng.hpp"
#include "mvrl/tensor.hpp"

namespace mvrl {

struct Linear {
  Tensor W;  // out x in
  Tensor b;  // out x 1
};

Linear make_linear(const std::string& name, int in, int out, Rng& rng);

// Feed-forward net with tanh hidden activations and a linear output layer.
struct Mlp {
  std::vector<Linear> layers;

  static Mlp create(const std::string& name, int in, const std::vector<int>& hidden, int out, Rng& rng);

  int in_dim() const { return static_cast<int>(layers.front().W.value.cols()); }
  int out_dim() const { return static_cast<int>(layers.back().W.value.rows()); }

  void collect(std::vector<Tensor*>& out);

  // Forward without a tape; columns are batch samples.
  Mat forward_plain(const Mat& x) const;

  // Jacobian d output / d input at a single input column (out_dim x in_dim).
  Mat input_jacobian(const Vec& x) const;
};

struct BoundMlp {
  std::vector<std::pair<ad::Var, ad::Var>> layers;  // (W, b)
  ad::Var forward(ad::Var x) const;
};

BoundMlp bind_mlp(Binder& binder, Mlp& mlp);

// Gated recurrent cell: update/reset gates plus candidate state.
struct GruCell {
  Tensor Wz, Uz, bz;
  Tensor Wr, Ur, br;
  Tensor Wh, Uh, bh;

  static GruCell create(const std::string& name, int in, int units, Rng& rng);

  int in_dim() const { return static_cast<int>(Wz.value.cols()); }
  int units() const { return static_cast<int>(Wz.value.rows()); }

  void collect(std::vector<Tensor*>& out);

  Mat step_plain(const Mat& x, const Mat& h) const;
};

struct BoundGru {
  ad::Var Wz, Uz, bz, Wr, Ur, br, Wh, Uh, bh;
  ad::Var step(ad::Var x, ad::Var h) const;
};

BoundGru bind_gru(Binder& binder, GruCell& cell);

// One-hot encoding of action indices, one column per entry.
Mat one_hot(const Eigen::VectorXi& actions, int n_actions);

}  // namespace mvrl
