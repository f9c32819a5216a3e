#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "deua/rng.hpp"
#include "deua/tensor.hpp"

namespace deua {

enum class Activation { kIdentity, kSilu, kRelu };

double activate(Activation a, double x);
double activate_grad(Activation a, double x);
const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

/// Fully connected layer: y = act(x W^T + b).
struct DenseLayer {
  Tensor2 weight;            // out x in
  std::vector<double> bias;  // out
  Activation activation = Activation::kIdentity;

  std::size_t in_dim() const { return weight.cols; }
  std::size_t out_dim() const { return weight.rows; }
};

/// Xavier-uniform weights (+-sqrt(6/(fan_in+fan_out))), zero bias.
DenseLayer make_dense_layer(std::size_t out, std::size_t in, Activation act,
                            Rng& rng);

struct ForwardCache {
  std::vector<Tensor2> inputs;   // inputs[l] is the input seen by layer l
  std::vector<Tensor2> preacts;  // pre-activation of layer l
  Tensor2 output;
};

/// Runs the stack on a (batch x in) tensor, caching what backward needs.
ForwardCache forward(const std::vector<DenseLayer>& layers,
                     const Tensor2& input);
/// Forward without a cache, for inference paths.
Tensor2 forward_value(const std::vector<DenseLayer>& layers,
                      const Tensor2& input);

struct LayerGrads {
  Tensor2 dweight;
  std::vector<double> dbias;
};

struct BackwardResult {
  std::vector<LayerGrads> layers;
  Tensor2 dinput;
};

/// Backpropagates an upstream gradient (same shape as cache.output) through
/// the stack that produced `cache`.
BackwardResult backward(const std::vector<DenseLayer>& layers,
                        const ForwardCache& cache, const Tensor2& upstream);

// ---------------------------------------------------------------------------
// Optimizer

struct ParamRef {
  double* data;
  std::size_t size;
};
struct GradRef {
  const double* data;
  std::size_t size;
};

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adaptive-moment optimizer with bias correction. Moment accumulators are
/// laid out to match the parameter list handed to the constructor; the same
/// list shape must be used on every step.
class AdamOptimizer {
 public:
  AdamOptimizer(const std::vector<ParamRef>& params, AdamConfig cfg);

  void step(const std::vector<ParamRef>& params,
            const std::vector<GradRef>& grads);

  std::int64_t step_count() const { return step_count_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::int64_t step_count_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

// Parameter plumbing for whole layer stacks (weights then bias, per layer).
std::vector<ParamRef> layer_param_refs(std::vector<DenseLayer>& layers);
std::vector<double> flatten_params(const std::vector<DenseLayer>& layers);
void set_params(std::vector<DenseLayer>& layers,
                const std::vector<double>& flat);
std::vector<double> flatten_grads(const std::vector<LayerGrads>& grads);

// ---------------------------------------------------------------------------
// Gradient checking

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t flagged = 0;  // entries whose relative error exceeds tolerance
  double tolerance = 0.0;
  bool ok = false;
};

/// Compares an analytic gradient against central finite differences of
/// `loss_fn` at `params`. Relative error per entry uses
/// |a - fd| / max(|a|, |fd|, 1e-8).
GradCheckReport finite_diff_check(
    const std::function<double(const std::vector<double>&)>& loss_fn,
    const std::vector<double>& params, const std::vector<double>& analytic,
    double tolerance, double h = 1e-5);

}  // namespace deua
