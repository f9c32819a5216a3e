#include "deua/nn.hpp"

#include <cmath>
#include <string>

#include "deua/errors.hpp"

namespace deua {

double activate(Activation a, double x) {
  switch (a) {
    case Activation::kIdentity:
      return x;
    case Activation::kSilu:
      return x / (1.0 + std::exp(-x));
    case Activation::kRelu:
      return x > 0.0 ? x : 0.0;
  }
  return x;
}

double activate_grad(Activation a, double x) {
  switch (a) {
    case Activation::kIdentity:
      return 1.0;
    case Activation::kSilu: {
      const double s = 1.0 / (1.0 + std::exp(-x));
      return s * (1.0 + x * (1.0 - s));
    }
    case Activation::kRelu:
      return x > 0.0 ? 1.0 : 0.0;
  }
  return 1.0;
}

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::kIdentity:
      return "identity";
    case Activation::kSilu:
      return "silu";
    case Activation::kRelu:
      return "relu";
  }
  return "identity";
}

Activation activation_from_name(const std::string& name) {
  if (name == "identity") return Activation::kIdentity;
  if (name == "silu") return Activation::kSilu;
  if (name == "relu") return Activation::kRelu;
  throw ParameterError("unknown activation '" + name + "'");
}

DenseLayer make_dense_layer(std::size_t out, std::size_t in, Activation act,
                            Rng& rng) {
  DenseLayer layer;
  layer.weight = Tensor2(out, in);
  layer.bias.assign(out, 0.0);
  layer.activation = act;
  const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
  for (auto& w : layer.weight.data) w = rng.uniform(-bound, bound);
  return layer;
}

ForwardCache forward(const std::vector<DenseLayer>& layers,
                     const Tensor2& input) {
  ForwardCache cache;
  cache.inputs.reserve(layers.size());
  cache.preacts.reserve(layers.size());
  Tensor2 x = input;
  for (const auto& layer : layers) {
    if (x.cols != layer.in_dim()) {
      throw ShapeError("forward: input cols " + std::to_string(x.cols) +
                       " != layer in_dim " + std::to_string(layer.in_dim()));
    }
    cache.inputs.push_back(x);
    Tensor2 pre = matmul_nt(x, layer.weight);
    add_row_vector(pre, layer.bias);
    cache.preacts.push_back(pre);
    Tensor2 out(pre.rows, pre.cols);
    for (std::size_t i = 0; i < pre.data.size(); ++i) {
      out.data[i] = activate(layer.activation, pre.data[i]);
    }
    x = std::move(out);
  }
  cache.output = std::move(x);
  return cache;
}

Tensor2 forward_value(const std::vector<DenseLayer>& layers,
                      const Tensor2& input) {
  Tensor2 x = input;
  for (const auto& layer : layers) {
    if (x.cols != layer.in_dim()) {
      throw ShapeError("forward: input cols " + std::to_string(x.cols) +
                       " != layer in_dim " + std::to_string(layer.in_dim()));
    }
    Tensor2 pre = matmul_nt(x, layer.weight);
    add_row_vector(pre, layer.bias);
    for (auto& v : pre.data) v = activate(layer.activation, v);
    x = std::move(pre);
  }
  return x;
}

BackwardResult backward(const std::vector<DenseLayer>& layers,
                        const ForwardCache& cache, const Tensor2& upstream) {
  if (cache.inputs.size() != layers.size() ||
      cache.preacts.size() != layers.size()) {
    throw StateError("backward: cache does not match layer stack");
  }
  if (!upstream.same_shape(cache.output)) {
    throw ShapeError("backward: upstream gradient shape mismatch");
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (cache.preacts[l].cols != layers[l].out_dim() ||
        cache.inputs[l].cols != layers[l].in_dim()) {
      throw StateError("backward: cache produced by a different stack");
    }
  }

  BackwardResult result;
  result.layers.resize(layers.size());
  Tensor2 grad = upstream;
  for (std::size_t l = layers.size(); l-- > 0;) {
    const auto& layer = layers[l];
    const Tensor2& pre = cache.preacts[l];
    Tensor2 dpre = grad;
    for (std::size_t i = 0; i < dpre.data.size(); ++i) {
      dpre.data[i] *= activate_grad(layer.activation, pre.data[i]);
    }
    result.layers[l].dweight = matmul_tn(dpre, cache.inputs[l]);
    result.layers[l].dbias = column_sums(dpre);
    grad = matmul(dpre, layer.weight);
  }
  result.dinput = std::move(grad);
  return result;
}

AdamOptimizer::AdamOptimizer(const std::vector<ParamRef>& params,
                             AdamConfig cfg)
    : cfg_(cfg) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const auto& p : params) {
    m_.emplace_back(p.size, 0.0);
    v_.emplace_back(p.size, 0.0);
  }
}

void AdamOptimizer::step(const std::vector<ParamRef>& params,
                         const std::vector<GradRef>& grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw ShapeError("adam: parameter list does not match optimizer state");
  }
  ++step_count_;
  const double b1 = cfg_.beta1;
  const double b2 = cfg_.beta2;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(step_count_));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(step_count_));
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (params[p].size != m_[p].size() || grads[p].size != m_[p].size()) {
      throw ShapeError("adam: accumulator shape mismatch at tensor " +
                       std::to_string(p));
    }
    double* w = params[p].data;
    const double* g = grads[p].data;
    auto& m = m_[p];
    auto& v = v_[p];
    for (std::size_t i = 0; i < m.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      const double mhat = m[i] / corr1;
      const double vhat = v[i] / corr2;
      w[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

std::vector<ParamRef> layer_param_refs(std::vector<DenseLayer>& layers) {
  std::vector<ParamRef> refs;
  refs.reserve(layers.size() * 2);
  for (auto& layer : layers) {
    refs.push_back({layer.weight.data.data(), layer.weight.data.size()});
    refs.push_back({layer.bias.data(), layer.bias.size()});
  }
  return refs;
}

std::vector<double> flatten_params(const std::vector<DenseLayer>& layers) {
  std::vector<double> flat;
  for (const auto& layer : layers) {
    flat.insert(flat.end(), layer.weight.data.begin(),
                layer.weight.data.end());
    flat.insert(flat.end(), layer.bias.begin(), layer.bias.end());
  }
  return flat;
}

void set_params(std::vector<DenseLayer>& layers,
                const std::vector<double>& flat) {
  std::size_t pos = 0;
  for (auto& layer : layers) {
    for (auto& w : layer.weight.data) w = flat[pos++];
    for (auto& b : layer.bias) b = flat[pos++];
  }
  if (pos != flat.size()) {
    throw ShapeError("set_params: flat vector length mismatch");
  }
}

std::vector<double> flatten_grads(const std::vector<LayerGrads>& grads) {
  std::vector<double> flat;
  for (const auto& g : grads) {
    flat.insert(flat.end(), g.dweight.data.begin(), g.dweight.data.end());
    flat.insert(flat.end(), g.dbias.begin(), g.dbias.end());
  }
  return flat;
}

GradCheckReport finite_diff_check(
    const std::function<double(const std::vector<double>&)>& loss_fn,
    const std::vector<double>& params, const std::vector<double>& analytic,
    double tolerance, double h) {
  if (params.size() != analytic.size()) {
    throw ShapeError("finite_diff_check: gradient length mismatch");
  }
  GradCheckReport report;
  report.tolerance = tolerance;
  std::vector<double> probe = params;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + h;
    const double up = loss_fn(probe);
    probe[i] = saved - h;
    const double down = loss_fn(probe);
    probe[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("finite_diff_check: non-finite loss at entry " +
                         std::to_string(i));
    }
    const double fd = (up - down) / (2.0 * h);
    const double a = analytic[i];
    const double denom = std::max({std::fabs(a), std::fabs(fd), 1e-8});
    const double rel = std::fabs(a - fd) / denom;
    if (rel > report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst_index = i;
    }
    if (rel > tolerance) ++report.flagged;
  }
  report.ok = report.flagged == 0;
  return report;
}

}  // namespace deua
