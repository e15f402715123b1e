#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "mvrl/rng.hpp"
#include "mvrl/tensor.hpp"

// Reverse-mode automatic differentiation over dense double matrices.
// A Tape records primitive operations as they execute (define-by-run);
// backward() walks the record in reverse. Batches are laid out as columns,
// so one matmul drives a whole minibatch.
namespace mvrl::ad {

class Tape;

// Lightweight handle to a node on a tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  bool valid() const { return tape_ != nullptr; }
  const Mat& value() const;
  const Mat& grad() const;
  // False when backward has not reached this node (e.g. it was not part of
  // the differentiated objective).
  bool has_grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const;

  Tape* tape() const { return tape_; }
  int id() const { return id_; }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf node holding an input value. Gradients are accumulated only for
  // nodes created with needs_grad = true (and everything downstream).
  Var leaf(Mat value, bool needs_grad);
  Var constant(Mat value) { return leaf(std::move(value), false); }
  Var constant_scalar(double v) { return leaf(Mat::Constant(1, 1, v), false); }

  // Seeds the root gradient (1 for a scalar root) and propagates to leaves.
  void backward(Var root);
  void backward(Var root, const Mat& seed);

  // Drops all nodes; handles into this tape become invalid.
  void clear();
  std::size_t size() const { return nodes_.size(); }

  struct Node {
    Mat value;
    Mat grad;
    bool needs_grad = false;
    const char* op = "";
    std::function<void(Tape&)> back;  // empty for leaves/constants
  };

  Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }
  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }

  Var make(const char* op, Mat value, bool needs_grad, std::function<void(Tape&)> back);
  void accumulate(int id, const Mat& g);

 private:
  std::vector<Node> nodes_;
  bool ran_forward_ = false;
};

// -- primitive operations --------------------------------------------------

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // elementwise
Var matmul(Var a, Var b);
Var neg(Var x);
Var scale(Var x, double c);
Var add_scalar(Var x, double c);
// Adds an m-by-1 bias to every column of an m-by-n matrix.
Var add_col(Var x, Var bias);

Var tanh_(Var x);
Var sigmoid_(Var x);
Var exp_(Var x);
Var log_(Var x);
Var square(Var x);
Var sqrt_(Var x);
Var clamp(Var x, double lo, double hi);
Var min_(Var a, Var b);  // elementwise; ties route gradient to a

Var sum(Var x);        // 1x1 total
Var mean_all(Var x);   // 1x1 mean
Var col_sum(Var x);    // 1xn per-column totals
Var row_mean(Var x);   // mx1 mean across columns
Var norm2_cols(Var x); // 1xn per-column Euclidean norms

Var concat_rows(Var a, Var b);
Var slice_rows(Var x, Eigen::Index start, Eigen::Index len);
// out(0, j) = x(indices[j], j); gradient scatters back.
Var select_rows(Var x, const Eigen::VectorXi& indices);
Var log_softmax_cols(Var x);

// -- composite operations ---------------------------------------------------

// Log-variances are clamped to [-10, 10] before exponentiation throughout.
constexpr double kLogVarMin = -10.0;
constexpr double kLogVarMax = 10.0;

// KL(N(mu_q, e^lv_q) || N(mu_p, e^lv_p)) for diagonal Gaussians, summed over
// all entries; returns a 1x1 node.
Var kl_diag_gaussians(Var mu_q, Var logvar_q, Var mu_p, Var logvar_p);

// mu + exp(logvar/2) * eps with eps drawn once from rng; gradient flows to
// both mu and logvar.
Var reparam_sample(Var mu, Var logvar, Rng& rng);

}  // namespace mvrl::ad
