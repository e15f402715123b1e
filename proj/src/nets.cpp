#include "mvrl/nets.hpp"

#include <cmath>
#include <stdexcept>

namespace mvrl {

namespace {

Mat xavier_uniform(int rows, int cols, Rng& rng) {
  double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(-limit, limit);
  return m;
}

}  // namespace

Linear make_linear(const std::string& name, int in, int out, Rng& rng) {
  Linear l;
  l.W = Tensor{name + ".W", xavier_uniform(out, in, rng)};
  l.b = Tensor{name + ".b", Mat::Zero(out, 1)};
  return l;
}

Mlp Mlp::create(const std::string& name, int in, const std::vector<int>& hidden, int out, Rng& rng) {
  Mlp mlp;
  int prev = in;
  int idx = 0;
  for (int h : hidden) {
    mlp.layers.push_back(make_linear(name + ".l" + std::to_string(idx++), prev, h, rng));
    prev = h;
  }
  mlp.layers.push_back(make_linear(name + ".l" + std::to_string(idx), prev, out, rng));
  return mlp;
}

void Mlp::collect(std::vector<Tensor*>& out) {
  for (auto& l : layers) {
    out.push_back(&l.W);
    out.push_back(&l.b);
  }
}

Mat Mlp::forward_plain(const Mat& x) const {
  if (x.rows() != in_dim())
    throw std::runtime_error("Mlp::forward_plain: input dim " + std::to_string(x.rows()) +
                             " != " + std::to_string(in_dim()));
  Mat h = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    h = (layers[i].W.value * h).colwise() + Vec(layers[i].b.value.col(0));
    if (i + 1 < layers.size()) h = h.array().tanh();
  }
  return h;
}

Mat Mlp::input_jacobian(const Vec& x) const {
  Mat j = Mat::Identity(in_dim(), in_dim());
  Vec h = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    j = layers[i].W.value * j;
    h = (layers[i].W.value * h + layers[i].b.value.col(0)).eval();
    if (i + 1 < layers.size()) {
      Vec act = h.array().tanh();
      j = (1.0 - act.array().square()).matrix().asDiagonal() * j;
      h = act;
    }
  }
  return j;
}

ad::Var BoundMlp::forward(ad::Var x) const {
  ad::Var h = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    h = ad::add_col(ad::matmul(layers[i].first, h), layers[i].second);
    if (i + 1 < layers.size()) h = ad::tanh_(h);
  }
  return h;
}

BoundMlp bind_mlp(Binder& binder, Mlp& mlp) {
  BoundMlp out;
  for (auto& l : mlp.layers) {
    ad::Var w = binder.bind(l.W);
    ad::Var b = binder.bind(l.b);
    out.layers.emplace_back(w, b);
  }
  return out;
}

GruCell GruCell::create(const std::string& name, int in, int units, Rng& rng) {
  GruCell c;
  c.Wz = Tensor{name + ".Wz", xavier_uniform(units, in, rng)};
  c.Uz = Tensor{name + ".Uz", xavier_uniform(units, units, rng)};
  c.bz = Tensor{name + ".bz", Mat::Zero(units, 1)};
  c.Wr = Tensor{name + ".Wr", xavier_uniform(units, in, rng)};
  c.Ur = Tensor{name + ".Ur", xavier_uniform(units, units, rng)};
  c.br = Tensor{name + ".br", Mat::Zero(units, 1)};
  c.Wh = Tensor{name + ".Wh", xavier_uniform(units, in, rng)};
  c.Uh = Tensor{name + ".Uh", xavier_uniform(units, units, rng)};
  c.bh = Tensor{name + ".bh", Mat::Zero(units, 1)};
  return c;
}

void GruCell::collect(std::vector<Tensor*>& out) {
  for (Tensor* t : {&Wz, &Uz, &bz, &Wr, &Ur, &br, &Wh, &Uh, &bh}) out.push_back(t);
}

Mat GruCell::step_plain(const Mat& x, const Mat& h) const {
  auto sigmoid = [](const Mat& m) { return (1.0 / (1.0 + (-m.array()).exp())).matrix(); };
  Mat z = sigmoid(((Wz.value * x + Uz.value * h).colwise() + Vec(bz.value.col(0))));
  Mat r = sigmoid(((Wr.value * x + Ur.value * h).colwise() + Vec(br.value.col(0))));
  Mat c = ((Wh.value * x + Uh.value * (r.cwiseProduct(h))).colwise() + Vec(bh.value.col(0))).array().tanh();
  return (1.0 - z.array()).matrix().cwiseProduct(h) + z.cwiseProduct(c);
}

ad::Var BoundGru::step(ad::Var x, ad::Var h) const {
  using namespace ad;
  Var z = sigmoid_(add_col(add(matmul(Wz, x), matmul(Uz, h)), bz));
  Var r = sigmoid_(add_col(add(matmul(Wr, x), matmul(Ur, h)), br));
  Var c = tanh_(add_col(add(matmul(Wh, x), matmul(Uh, mul(r, h))), bh));
  Var one_minus_z = add_scalar(neg(z), 1.0);
  return add(mul(one_minus_z, h), mul(z, c));
}

BoundGru bind_gru(Binder& binder, GruCell& cell) {
  return BoundGru{binder.bind(cell.Wz), binder.bind(cell.Uz), binder.bind(cell.bz),
                  binder.bind(cell.Wr), binder.bind(cell.Ur), binder.bind(cell.br),
                  binder.bind(cell.Wh), binder.bind(cell.Uh), binder.bind(cell.bh)};
}

Mat one_hot(const Eigen::VectorXi& actions, int n_actions) {
  Mat m = Mat::Zero(n_actions, actions.size());
  for (Eigen::Index j = 0; j < actions.size(); ++j) {
    if (actions(j) < 0 || actions(j) >= n_actions)
      throw std::runtime_error("one_hot: action out of range");
    m(actions(j), j) = 1.0;
  }
  return m;
}

}  // namespace mvrl
