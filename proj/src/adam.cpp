#include "mvrl/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace mvrl {

namespace {

const Mat& checked_grad(const ParamBinding& p) {
  const Mat& g = p.var.grad();
  if (!g.allFinite())
    throw std::runtime_error("optimizer: non-finite gradient for parameter '" + p.tensor->name + "'");
  return g;
}

}  // namespace

void Adam::step(const std::vector<ParamBinding>& params) {
  double clip_scale = 1.0;
  if (config_.clip_global_norm > 0.0) {
    double sq = 0.0;
    for (const auto& p : params)
      if (p.var.has_grad()) sq += checked_grad(p).squaredNorm();
    double norm = std::sqrt(sq);
    if (norm > config_.clip_global_norm) clip_scale = config_.clip_global_norm / norm;
  }
  ++t_;
  double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (const auto& p : params) {
    // Parameters outside the differentiated graph are left untouched.
    if (!p.var.has_grad()) continue;
    Mat g = checked_grad(p) * clip_scale;
    auto [it, inserted] = moments_.try_emplace(p.tensor->name);
    Moments& mom = it->second;
    if (inserted) {
      mom.m = Mat::Zero(g.rows(), g.cols());
      mom.v = Mat::Zero(g.rows(), g.cols());
    } else if (mom.m.rows() != g.rows() || mom.m.cols() != g.cols()) {
      throw std::runtime_error("optimizer: shape change for parameter '" + p.tensor->name + "'");
    }
    mom.m = config_.beta1 * mom.m + (1.0 - config_.beta1) * g;
    mom.v = config_.beta2 * mom.v + (1.0 - config_.beta2) * g.cwiseProduct(g);
    Mat mhat = mom.m / bc1;
    Mat vhat = mom.v / bc2;
    p.tensor->value -= config_.stepsize * mhat.cwiseQuotient(vhat.cwiseSqrt() + Mat::Constant(g.rows(), g.cols(), config_.eps));
  }
}

void Adam::sgd_ascent(const std::vector<ParamBinding>& params, double eta) {
  for (const auto& p : params)
    if (p.var.has_grad()) p.tensor->value += eta * checked_grad(p);
}

}  // namespace mvrl
