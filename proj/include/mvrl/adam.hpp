#pragma once

#include <map>
#include <string>
#include <vector>

#include "mvrl/autodiff.hpp"
#include "mvrl/tensor.hpp"

namespace mvrl {

// A parameter bound onto a tape for one forward/backward pass.
struct ParamBinding {
  Tensor* tensor;
  ad::Var var;
};

// Binds tensors as gradient-tracked leaves and remembers the pairing so an
// optimizer can read gradients back after backward().
class Binder {
 public:
  explicit Binder(ad::Tape& tape) : tape_(&tape) {}

  ad::Var bind(Tensor& t) {
    ad::Var v = tape_->leaf(t.value, true);
    items_.push_back({&t, v});
    return v;
  }

  const std::vector<ParamBinding>& items() const { return items_; }
  ad::Tape& tape() { return *tape_; }

 private:
  ad::Tape* tape_;
  std::vector<ParamBinding> items_;
};

struct AdamConfig {
  double stepsize = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Global-norm gradient clip; 0 disables.
  double clip_global_norm = 0.0;
};

// Adaptive-moment optimizer. Moments are keyed by tensor name, so the same
// instance can be reused across tapes. Non-finite gradients abort with a
// diagnostic naming the parameter.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  // Applies one update from the gradients recorded on the bindings' tape.
  void step(const std::vector<ParamBinding>& params);

  // SGD ascent step: value += eta * grad. Shares the non-finite check.
  static void sgd_ascent(const std::vector<ParamBinding>& params, double eta);

  long steps() const { return t_; }
  AdamConfig& config() { return config_; }

 private:
  struct Moments {
    Mat m;
    Mat v;
  };
  AdamConfig config_;
  std::map<std::string, Moments> moments_;
  long t_ = 0;
};

}  // namespace mvrl
