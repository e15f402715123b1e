#pragma once

#include <functional>
#include <vector>

#include "mvrl/adam.hpp"
#include "mvrl/autodiff.hpp"
#include "mvrl/rng.hpp"
#include "mvrl/tensor.hpp"

namespace mvrl::testing {

// Rebuilds a scalar graph from the current values of the bound tensors.
using ScalarGraphFn = std::function<ad::Var(Binder&)>;

// Central finite differences against reverse-mode gradients. Returns the
// worst mismatch, where err = |fd - g| / max(|fd|, |g|, 1.0). Checks every
// coordinate up to max_coords per tensor, then a deterministic subset.
inline double max_fd_error(const std::vector<Tensor*>& params, const ScalarGraphFn& fn,
                           double h = 1e-5, int max_coords = 400) {
  auto eval = [&]() {
    ad::Tape tape;
    Binder binder(tape);
    return fn(binder).scalar();
  };

  ad::Tape tape;
  Binder binder(tape);
  ad::Var root = fn(binder);
  tape.backward(root);
  // Bindings are matched by tensor pointer; argument evaluation order inside
  // fn is unspecified, so positions cannot be trusted.
  std::vector<Mat> grads;
  for (Tensor* t : params) {
    const ParamBinding* found = nullptr;
    for (const auto& item : binder.items())
      if (item.tensor == t) found = &item;
    if (!found) throw std::runtime_error("max_fd_error: fn did not bind tensor " + t->name);
    // Parameters outside the differentiated objective carry zero gradient.
    grads.push_back(found->var.has_grad() ? found->var.grad()
                                          : Mat::Zero(t->value.rows(), t->value.cols()));
  }

  double worst = 0.0;
  Rng pick(123456789);
  for (std::size_t p = 0; p < params.size(); ++p) {
    Mat& value = params[p]->value;
    const Eigen::Index n = value.size();
    std::vector<Eigen::Index> coords;
    if (n <= max_coords) {
      for (Eigen::Index i = 0; i < n; ++i) coords.push_back(i);
    } else {
      for (int i = 0; i < max_coords; ++i) coords.push_back(pick.uniform_int(static_cast<int>(n)));
    }
    for (Eigen::Index i : coords) {
      double saved = value.data()[i];
      value.data()[i] = saved + h;
      double fp = eval();
      value.data()[i] = saved - h;
      double fm = eval();
      value.data()[i] = saved;
      double fd = (fp - fm) / (2.0 * h);
      double g = grads[p].data()[i];
      double err = std::abs(fd - g) / std::max({std::abs(fd), std::abs(g), 1.0});
      if (err > worst) worst = err;
    }
  }
  return worst;
}

inline Mat random_mat(Eigen::Index rows, Eigen::Index cols, Rng& rng, double scale = 1.0) {
  Mat m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = scale * rng.normal();
  return m;
}

}  // namespace mvrl::testing
