#include "mvrl/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace mvrl::ad {

namespace {

[[noreturn]] void shape_error(const char* op, const Mat& a, const Mat& b, int node_id) {
  throw std::runtime_error(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                           std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                           std::to_string(b.cols()) + " at node " + std::to_string(node_id));
}

void require_same_tape(const char* op, Var a, Var b) {
  if (!a.valid() || !b.valid() || a.tape() != b.tape())
    throw std::runtime_error(std::string(op) + ": operands missing or from different tapes");
}

void require_same_shape(const char* op, Var a, Var b) {
  require_same_tape(op, a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error(op, a.value(), b.value(), b.id());
}

bool needs(Var x) { return x.tape()->node(x.id()).needs_grad; }

}  // namespace

const Mat& Var::value() const {
  if (!valid()) throw std::runtime_error("Var::value: invalid handle");
  return tape_->node(id_).value;
}

const Mat& Var::grad() const {
  if (!valid()) throw std::runtime_error("Var::grad: invalid handle");
  const Mat& g = tape_->node(id_).grad;
  if (g.size() == 0) throw std::runtime_error("Var::grad: backward has not run");
  return g;
}

bool Var::has_grad() const {
  return valid() && tape_->node(id_).grad.size() > 0;
}

double Var::scalar() const {
  const Mat& v = value();
  if (v.size() != 1) throw std::runtime_error("Var::scalar: not a 1x1 node");
  return v(0, 0);
}

Var Tape::leaf(Mat value, bool needs_grad) {
  return make("leaf", std::move(value), needs_grad, {});
}

Var Tape::make(const char* op, Mat value, bool needs_grad, std::function<void(Tape&)> back) {
  nodes_.push_back(Node{std::move(value), Mat(), needs_grad, op, std::move(back)});
  ran_forward_ = true;
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

void Tape::accumulate(int id, const Mat& g) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (!n.needs_grad) return;
  if (n.grad.size() == 0)
    n.grad = g;
  else
    n.grad += g;
}

void Tape::backward(Var root) {
  if (!root.valid() || root.value().size() != 1)
    throw std::runtime_error("backward: root must be a valid 1x1 node");
  backward(root, Mat::Constant(1, 1, 1.0));
}

void Tape::backward(Var root, const Mat& seed) {
  if (!ran_forward_ || nodes_.empty())
    throw std::runtime_error("backward: no forward pass recorded on this tape");
  if (root.tape() != this || root.id() < 0 || root.id() >= static_cast<int>(nodes_.size()))
    throw std::runtime_error("backward: root does not belong to this tape");
  Node& r = nodes_[static_cast<std::size_t>(root.id())];
  if (seed.rows() != r.value.rows() || seed.cols() != r.value.cols())
    shape_error("backward seed", seed, r.value, root.id());
  for (auto& n : nodes_) n.grad = Mat();
  if (!r.needs_grad) return;  // nothing differentiable upstream
  r.grad = seed;
  for (int i = root.id(); i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.needs_grad || n.grad.size() == 0 || !n.back) continue;
    n.back(*this);
  }
}

void Tape::clear() {
  nodes_.clear();
  ran_forward_ = false;
}

namespace {

// Creates the output node and attaches a backward closure that sees the
// output node id. All closures capture node ids, never Mat references.
template <typename BackFn>
Var record(Tape& t, const char* op, Mat value, bool needs_grad, BackFn&& fn) {
  Var out = t.make(op, std::move(value), needs_grad, {});
  if (needs_grad) {
    int io = out.id();
    t.node(io).back = [io, fn](Tape& tp) { fn(tp, tp.node(io).grad); };
  }
  return out;
}

}  // namespace

Var add(Var a, Var b) {
  require_same_shape("add", a, b);
  Tape& t = *a.tape();
  int ia = a.id(), ib = b.id();
  return record(t, "add", a.value() + b.value(), needs(a) || needs(b), [ia, ib](Tape& tp, const Mat& g) {
    tp.accumulate(ia, g);
    tp.accumulate(ib, g);
  });
}

Var sub(Var a, Var b) {
  require_same_shape("sub", a, b);
  Tape& t = *a.tape();
  int ia = a.id(), ib = b.id();
  return record(t, "sub", a.value() - b.value(), needs(a) || needs(b), [ia, ib](Tape& tp, const Mat& g) {
    tp.accumulate(ia, g);
    tp.accumulate(ib, -g);
  });
}

Var mul(Var a, Var b) {
  require_same_shape("mul", a, b);
  Tape& t = *a.tape();
  int ia = a.id(), ib = b.id();
  return record(t, "mul", a.value().cwiseProduct(b.value()), needs(a) || needs(b),
                [ia, ib](Tape& tp, const Mat& g) {
                  tp.accumulate(ia, g.cwiseProduct(tp.node(ib).value));
                  tp.accumulate(ib, g.cwiseProduct(tp.node(ia).value));
                });
}

Var matmul(Var a, Var b) {
  require_same_tape("matmul", a, b);
  if (a.cols() != b.rows()) shape_error("matmul", a.value(), b.value(), b.id());
  Tape& t = *a.tape();
  int ia = a.id(), ib = b.id();
  return record(t, "matmul", a.value() * b.value(), needs(a) || needs(b), [ia, ib](Tape& tp, const Mat& g) {
    tp.accumulate(ia, g * tp.node(ib).value.transpose());
    tp.accumulate(ib, tp.node(ia).value.transpose() * g);
  });
}

Var neg(Var x) {
  Tape& t = *x.tape();
  int ix = x.id();
  return record(t, "neg", -x.value(), needs(x), [ix](Tape& tp, const Mat& g) { tp.accumulate(ix, -g); });
}

Var scale(Var x, double c) {
  Tape& t = *x.tape();
  int ix = x.id();
  return record(t, "scale", x.value() * c, needs(x),
                [ix, c](Tape& tp, const Mat& g) { tp.accumulate(ix, g * c); });
}

Var add_scalar(Var x, double c) {
  Tape& t = *x.tape();
  int ix = x.id();
  return record(t, "add_scalar", x.value().array() + c, needs(x),
                [ix](Tape& tp, const Mat& g) { tp.accumulate(ix, g); });
}

Var add_col(Var x, Var bias) {
  require_same_tape("add_col", x, bias);
  if (bias.cols() != 1 || bias.rows() != x.rows()) shape_error("add_col", x.value(), bias.value(), bias.id());
  Tape& t = *x.tape();
  int ix = x.id(), ib = bias.id();
  return record(t, "add_col", x.value().colwise() + Vec(bias.value().col(0)), needs(x) || needs(bias),
                [ix, ib](Tape& tp, const Mat& g) {
                  tp.accumulate(ix, g);
                  tp.accumulate(ib, g.rowwise().sum());
                });
}

Var tanh_(Var x) {
  Tape& t = *x.tape();
  int ix = x.id();
  Var out = t.make("tanh", x.value().array().tanh(), needs(x), {});
  if (needs(x)) {
    int io = out.id();
    t.node(io).back = [ix, io](Tape& tp) {
      const Mat& g = tp.node(io).grad;
      const Mat& y = tp.node(io).value;
      tp.accumulate(ix, g.cwiseProduct((1.0 - y.array().square()).matrix()));
    };
  }
  return out;
}

Var sigmoid_(Var x) {
  Tape& t = *x.tape();
  int ix = x.id();
  Mat y = (1.0 / (1.0 + (-x.value().array()).exp())).matrix();
  Var out = t.make("sigmoid", std::move(y), needs(x), {});
  if (needs(x)) {
    int io = out.id();
    t.node(io).back = [ix, io](Tape& tp) {
      const Mat& g = tp.node(io).grad;
      const Mat& v = tp.node(io).value;
      tp.accumulate(ix, g.cwiseProduct(v.cwiseProduct((1.0 - v.array()).matrix())));
    };
  }
  return out;
}

Var exp_(Var x) {
  Tape& t = *x.tape();
  int ix = x.id();
  Var out = t.make("exp", x.value().array().exp(), needs(x), {});
  if (needs(x)) {
    int io = out.id();
    t.node(io).back = [ix, io](Tape& tp) {
      tp.accumulate(ix, tp.node(io).grad.cwiseProduct(tp.node(io).value));
    };
  }
  return out;
}

Var log_(Var x) {
  Tape& t = *x.tape();
  int ix = x.id();
  Var out = t.make("log", x.value().array().log(), needs(x), {});
  if (needs(x)) {
    int io = out.id();
    t.node(io).back = [ix, io](Tape& tp) {
      tp.accumulate(ix, tp.node(io).grad.cwiseQuotient(tp.node(ix).value));
    };
  }
  return out;
}

Var square(Var x) {
  Tape& t = *x.tape();
  int ix = x.id();
  Var out = t.make("square", x.value().array().square(), needs(x), {});
  if (needs(x)) {
    int io = out.id();
    t.node(io).back = [ix, io](Tape& tp) {
      tp.accumulate(ix, 2.0 * tp.node(io).grad.cwiseProduct(tp.node(ix).value));
    };
  }
  return out;
}

Var sqrt_(Var x) {
  Tape& t = *x.tape();
  int ix = x.id();
  Var out = t.make("sqrt", x.value().array().sqrt(), needs(x), {});
  if (needs(x)) {
    int io = out.id();
    t.node(io).back = [ix, io](Tape& tp) {
      tp.accumulate(ix, (tp.node(io).grad.array() * 0.5 / tp.node(io).value.array()).matrix());
    };
  }
  return out;
}

Var clamp(Var x, double lo, double hi) {
  Tape& t = *x.tape();
  int ix = x.id();
  Var out = t.make("clamp", x.value().array().max(lo).min(hi), needs(x), {});
  if (needs(x)) {
    int io = out.id();
    t.node(io).back = [ix, io, lo, hi](Tape& tp) {
      const Mat& xv = tp.node(ix).value;
      Mat mask = ((xv.array() >= lo) && (xv.array() <= hi)).cast<double>();
      tp.accumulate(ix, tp.node(io).grad.cwiseProduct(mask));
    };
  }
  return out;
}

Var min_(Var a, Var b) {
  require_same_shape("min", a, b);
  Tape& t = *a.tape();
  int ia = a.id(), ib = b.id();
  return record(t, "min", a.value().cwiseMin(b.value()), needs(a) || needs(b),
                [ia, ib](Tape& tp, const Mat& g) {
                  Mat take_a = (tp.node(ia).value.array() <= tp.node(ib).value.array()).cast<double>();
                  tp.accumulate(ia, g.cwiseProduct(take_a));
                  tp.accumulate(ib, g.cwiseProduct((1.0 - take_a.array()).matrix()));
                });
}

Var sum(Var x) {
  Tape& t = *x.tape();
  int ix = x.id();
  Eigen::Index r = x.rows(), c = x.cols();
  return record(t, "sum", Mat::Constant(1, 1, x.value().sum()), needs(x),
                [ix, r, c](Tape& tp, const Mat& g) {
                  tp.accumulate(ix, Mat::Constant(r, c, g(0, 0)));
                });
}

Var mean_all(Var x) {
  Tape& t = *x.tape();
  int ix = x.id();
  Eigen::Index r = x.rows(), c = x.cols();
  double n = static_cast<double>(r * c);
  return record(t, "mean_all", Mat::Constant(1, 1, x.value().mean()), needs(x),
                [ix, r, c, n](Tape& tp, const Mat& g) {
                  tp.accumulate(ix, Mat::Constant(r, c, g(0, 0) / n));
                });
}

Var col_sum(Var x) {
  Tape& t = *x.tape();
  int ix = x.id();
  Eigen::Index r = x.rows();
  return record(t, "col_sum", x.value().colwise().sum(), needs(x),
                [ix, r](Tape& tp, const Mat& g) {
                  tp.accumulate(ix, Mat::Ones(r, 1) * g);
                });
}

Var row_mean(Var x) {
  Tape& t = *x.tape();
  int ix = x.id();
  Eigen::Index c = x.cols();
  double n = static_cast<double>(c);
  return record(t, "row_mean", x.value().rowwise().mean(), needs(x),
                [ix, c, n](Tape& tp, const Mat& g) {
                  tp.accumulate(ix, (g / n) * Mat::Ones(1, c));
                });
}

Var norm2_cols(Var x) {
  Tape& t = *x.tape();
  int ix = x.id();
  Var out = t.make("norm2_cols", x.value().colwise().norm(), needs(x), {});
  if (needs(x)) {
    int io = out.id();
    t.node(io).back = [ix, io](Tape& tp) {
      const Mat& g = tp.node(io).grad;
      const Mat& xv = tp.node(ix).value;
      const Mat& nv = tp.node(io).value;
      Mat gx(xv.rows(), xv.cols());
      for (Eigen::Index j = 0; j < xv.cols(); ++j) {
        double n = nv(0, j);
        gx.col(j) = n > 1e-12 ? Vec(xv.col(j) * (g(0, j) / n)) : Vec::Zero(xv.rows());
      }
      tp.accumulate(ix, gx);
    };
  }
  return out;
}

Var concat_rows(Var a, Var b) {
  require_same_tape("concat_rows", a, b);
  if (a.cols() != b.cols()) shape_error("concat_rows", a.value(), b.value(), b.id());
  Tape& t = *a.tape();
  int ia = a.id(), ib = b.id();
  Mat v(a.rows() + b.rows(), a.cols());
  v.topRows(a.rows()) = a.value();
  v.bottomRows(b.rows()) = b.value();
  Eigen::Index ra = a.rows(), rb = b.rows();
  return record(t, "concat_rows", std::move(v), needs(a) || needs(b),
                [ia, ib, ra, rb](Tape& tp, const Mat& g) {
                  tp.accumulate(ia, g.topRows(ra));
                  tp.accumulate(ib, g.bottomRows(rb));
                });
}

Var slice_rows(Var x, Eigen::Index start, Eigen::Index len) {
  Tape& t = *x.tape();
  if (start < 0 || len <= 0 || start + len > x.rows())
    throw std::runtime_error("slice_rows: range out of bounds at node " + std::to_string(x.id()));
  int ix = x.id();
  Eigen::Index r = x.rows(), c = x.cols();
  return record(t, "slice_rows", x.value().middleRows(start, len), needs(x),
                [ix, start, len, r, c](Tape& tp, const Mat& g) {
                  Mat gx = Mat::Zero(r, c);
                  gx.middleRows(start, len) = g;
                  tp.accumulate(ix, gx);
                });
}

Var select_rows(Var x, const Eigen::VectorXi& indices) {
  Tape& t = *x.tape();
  if (indices.size() != x.cols())
    throw std::runtime_error("select_rows: need one index per column at node " + std::to_string(x.id()));
  for (Eigen::Index j = 0; j < indices.size(); ++j)
    if (indices(j) < 0 || indices(j) >= x.rows())
      throw std::runtime_error("select_rows: index out of range at column " + std::to_string(j));
  int ix = x.id();
  Mat v(1, x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) v(0, j) = x.value()(indices(j), j);
  Eigen::Index r = x.rows(), c = x.cols();
  Eigen::VectorXi idx = indices;
  return record(t, "select_rows", std::move(v), needs(x),
                [ix, idx, r, c](Tape& tp, const Mat& g) {
                  Mat gx = Mat::Zero(r, c);
                  for (Eigen::Index j = 0; j < c; ++j) gx(idx(j), j) = g(0, j);
                  tp.accumulate(ix, gx);
                });
}

Var log_softmax_cols(Var x) {
  Tape& t = *x.tape();
  int ix = x.id();
  Mat y(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    double m = x.value().col(j).maxCoeff();
    double lse = m + std::log((x.value().col(j).array() - m).exp().sum());
    y.col(j) = x.value().col(j).array() - lse;
  }
  Var out = t.make("log_softmax_cols", std::move(y), needs(x), {});
  if (needs(x)) {
    int io = out.id();
    t.node(io).back = [ix, io](Tape& tp) {
      const Mat& g = tp.node(io).grad;
      const Mat& y = tp.node(io).value;
      Mat gx(y.rows(), y.cols());
      for (Eigen::Index j = 0; j < y.cols(); ++j) {
        double gsum = g.col(j).sum();
        gx.col(j) = g.col(j) - (y.col(j).array().exp() * gsum).matrix();
      }
      tp.accumulate(ix, gx);
    };
  }
  return out;
}

Var kl_diag_gaussians(Var mu_q, Var logvar_q, Var mu_p, Var logvar_p) {
  require_same_shape("kl_diag_gaussians", mu_q, logvar_q);
  require_same_shape("kl_diag_gaussians", mu_q, mu_p);
  require_same_shape("kl_diag_gaussians", mu_q, logvar_p);
  Var lvq = clamp(logvar_q, kLogVarMin, kLogVarMax);
  Var lvp = clamp(logvar_p, kLogVarMin, kLogVarMax);
  Var dlv = sub(lvp, lvq);
  Var ratio = mul(add(exp_(lvq), square(sub(mu_q, mu_p))), exp_(neg(lvp)));
  return scale(sum(add_scalar(add(dlv, ratio), -1.0)), 0.5);
}

Var reparam_sample(Var mu, Var logvar, Rng& rng) {
  require_same_shape("reparam_sample", mu, logvar);
  Mat eps(mu.rows(), mu.cols());
  for (Eigen::Index r = 0; r < eps.rows(); ++r)
    for (Eigen::Index c = 0; c < eps.cols(); ++c) eps(r, c) = rng.normal();
  Var sd = exp_(scale(clamp(logvar, kLogVarMin, kLogVarMax), 0.5));
  return add(mu, mul(sd, mu.tape()->constant(std::move(eps))));
}

}  // namespace mvrl::ad
