#include "bfn/mlp.hpp"

#include <cmath>
#include <string>

namespace bfn {

namespace {

double activate(Activation a, double x) {
  if (a == Activation::tanh) return std::tanh(x);
  return x * sigmoid(x);
}

double activate_grad(Activation a, double x) {
  if (a == Activation::tanh) {
    const double th = std::tanh(x);
    return 1.0 - th * th;
  }
  const double s = sigmoid(x);
  return s * (1.0 + x * (1.0 - s));
}

}  // namespace

Mlp::Mlp(PredictorSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  std::size_t in = spec_.input_width() + spec_.time.width();
  std::size_t offset = 0;
  auto add = [&](std::size_t out) {
    layers_.push_back({in, out, offset});
    offset = layers_.back().end();
    in = out;
  };
  for (auto h : spec_.hidden) add(h);
  add(spec_.output_width());
  params_.assign(offset, 0.0);
}

Mlp Mlp::initialised(PredictorSpec spec, Rng& rng, double final_scale) {
  Mlp m(std::move(spec));
  for (std::size_t l = 0; l < m.layers_.size(); ++l) {
    const auto& L = m.layers_[l];
    double sd = 1.0 / std::sqrt(static_cast<double>(L.in));
    if (l + 1 == m.layers_.size()) sd *= final_scale;
    for (std::size_t j = 0; j < L.weight_count(); ++j) m.params_[L.offset + j] = sd * rng.normal();
  }
  return m;
}

void Mlp::set_params(Vec p) {
  if (p.size() != params_.size())
    throw ContractError("mlp: expected " + std::to_string(params_.size()) + " parameters, got " +
                        std::to_string(p.size()));
  params_ = std::move(p);
}

Vec Mlp::forward(std::span<const double> input, double t) const {
  Tape tape;
  return forward(input, t, tape);
}

Vec Mlp::forward(std::span<const double> input, double t, Tape& tape) const {
  if (input.size() != spec_.input_width())
    throw ContractError("mlp: input width " + std::to_string(input.size()) + ", expected " +
                        std::to_string(spec_.input_width()));
  tape.acts.clear();
  tape.pre.clear();
  Vec x(input.begin(), input.end());
  x.resize(input.size() + spec_.time.width());
  spec_.time.encode(t, std::span<double>(x).subspan(input.size()));

  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& L = layers_[l];
    const double* W = params_.data() + L.offset;
    const double* b = params_.data() + L.bias_offset();
    Vec z(L.out);
    for (std::size_t o = 0; o < L.out; ++o) {
      double s = b[o];
      const double* w = W + o * L.in;
      for (std::size_t i = 0; i < L.in; ++i) s += w[i] * x[i];
      z[o] = s;
    }
    tape.acts.push_back(std::move(x));
    if (l + 1 == layers_.size()) {
      tape.pre.push_back(z);
      return z;
    }
    x.resize(L.out);
    for (std::size_t o = 0; o < L.out; ++o) x[o] = activate(spec_.activation, z[o]);
    tape.pre.push_back(std::move(z));
  }
  return x;
}

void Mlp::backward(const Tape& tape, std::span<const double> upstream,
                   std::span<double> grad) const {
  if (tape.empty() || tape.acts.size() != layers_.size())
    throw ContractError("mlp: backward called without a recorded forward pass");
  if (upstream.size() != spec_.output_width())
    throw ContractError("mlp: upstream gradient has the wrong width");
  if (grad.size() != params_.size()) throw ContractError("mlp: gradient buffer has the wrong size");

  Vec delta(upstream.begin(), upstream.end());
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const auto& L = layers_[l];
    if (l + 1 != layers_.size())
      for (std::size_t o = 0; o < L.out; ++o) delta[o] *= activate_grad(spec_.activation, tape.pre[l][o]);
    const Vec& a = tape.acts[l];
    double* gW = grad.data() + L.offset;
    double* gb = grad.data() + L.bias_offset();
    for (std::size_t o = 0; o < L.out; ++o) {
      const double d = delta[o];
      gb[o] += d;
      if (d == 0.0) continue;
      double* row = gW + o * L.in;
      for (std::size_t i = 0; i < L.in; ++i) row[i] += d * a[i];
    }
    if (l == 0) break;
    Vec prev(L.in, 0.0);
    const double* W = params_.data() + L.offset;
    for (std::size_t o = 0; o < L.out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      const double* w = W + o * L.in;
      for (std::size_t i = 0; i < L.in; ++i) prev[i] += d * w[i];
    }
    delta = std::move(prev);
  }
}

Vec Mlp::backward(const Tape& tape, std::span<const double> upstream) const {
  Vec g(params_.size(), 0.0);
  backward(tape, upstream, g);
  return g;
}

}  // namespace bfn
