#include "deua/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "deua/errors.hpp"

namespace deua {

NoiseSchedule make_schedule(std::size_t T, double beta_start, double beta_end) {
  if (T < 2) throw ParameterError("make_schedule: T must be >= 2");
  if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0)) {
    throw ParameterError("make_schedule: need 0 < beta_start <= beta_end < 1");
  }
  NoiseSchedule sched;
  sched.T = T;
  sched.beta_start = beta_start;
  sched.beta_end = beta_end;
  sched.alpha_bar.assign(T + 1, 1.0);
  for (std::size_t t = 1; t <= T; ++t) {
    const double beta =
        beta_start + (beta_end - beta_start) *
                         (static_cast<double>(t - 1) /
                          static_cast<double>(T - 1));
    sched.alpha_bar[t] = sched.alpha_bar[t - 1] * (1.0 - beta);
  }
  sched.ddim_subset = make_ddim_subset(T, std::min<std::size_t>(T, 50));
  return sched;
}

std::vector<std::size_t> make_ddim_subset(std::size_t T, std::size_t S) {
  if (S == 0 || S > T) {
    throw ParameterError("make_ddim_subset: need 1 <= S <= T");
  }
  std::vector<std::size_t> subset(S);
  for (std::size_t k = 0; k < S; ++k) {
    // evenly spaced, tau_S = T
    subset[k] = (T * (k + 1)) / S;
  }
  subset.front() = std::max<std::size_t>(1, subset.front());
  for (std::size_t k = 1; k < S; ++k) {
    if (subset[k] <= subset[k - 1]) subset[k] = subset[k - 1] + 1;
  }
  if (subset.back() > T) throw ParameterError("make_ddim_subset: S too dense");
  return subset;
}

void validate_ddim_subset(const NoiseSchedule& sched) {
  if (sched.ddim_subset.empty()) {
    throw ParameterError("ddim_subset: empty");
  }
  std::size_t prev = 0;
  for (std::size_t tau : sched.ddim_subset) {
    if (tau <= prev || tau > sched.T) {
      throw ParameterError("ddim_subset: not strictly increasing within 1..T");
    }
    prev = tau;
  }
}

std::vector<double> time_embedding(std::size_t t, std::size_t T,
                                   std::size_t dim) {
  if (dim % 2 != 0) throw ParameterError("time_embedding: dim must be even");
  std::vector<double> emb(dim);
  const double frac = static_cast<double>(t) / static_cast<double>(T);
  constexpr double pi = 3.14159265358979323846;
  double freq = pi;
  for (std::size_t k = 0; k < dim / 2; ++k) {
    emb[2 * k] = std::sin(freq * frac);
    emb[2 * k + 1] = std::cos(freq * frac);
    freq *= 2.0;
  }
  return emb;
}

void DenoiserModel::check_consistent() const {
  if (trunk.empty()) throw StateError("denoiser: empty trunk");
  const std::size_t in = pixel_count() + time_embed_dim;
  if (trunk.front().in_dim() != in) {
    throw StateError("denoiser: trunk input dim " +
                     std::to_string(trunk.front().in_dim()) + " != " +
                     std::to_string(in));
  }
  for (std::size_t l = 1; l < trunk.size(); ++l) {
    if (trunk[l].in_dim() != trunk[l - 1].out_dim()) {
      throw StateError("denoiser: trunk dims do not chain at layer " +
                       std::to_string(l));
    }
  }
  if (head.in_dim() != trunk.back().out_dim()) {
    throw StateError("denoiser: head input dim != trunk output dim");
  }
  if (head.out_dim() != pixel_count()) {
    throw StateError("denoiser: head output dim != pixel count");
  }
}

DenoiserModel make_denoiser(std::size_t image_size,
                            const std::vector<std::size_t>& hidden,
                            std::size_t time_embed_dim, Rng& rng) {
  if (hidden.empty()) throw ParameterError("make_denoiser: no hidden layers");
  DenoiserModel m;
  m.image_size = image_size;
  m.time_embed_dim = time_embed_dim;
  std::size_t in = m.pixel_count() + time_embed_dim;
  for (std::size_t h : hidden) {
    m.trunk.push_back(make_dense_layer(h, in, Activation::kSilu, rng));
    in = h;
  }
  m.head = make_dense_layer(m.pixel_count(), in, Activation::kIdentity, rng);
  return m;
}

namespace {

Tensor2 assemble_input(const DenoiserModel& m, const Tensor2& x_t,
                       const std::vector<std::size_t>& ts,
                       const NoiseSchedule& sched) {
  if (x_t.cols != m.pixel_count()) {
    throw ShapeError("denoiser input: expected " +
                     std::to_string(m.pixel_count()) + " pixels, got " +
                     std::to_string(x_t.cols));
  }
  if (ts.size() != x_t.rows) {
    throw ShapeError("denoiser input: one step index per row required");
  }
  Tensor2 input(x_t.rows, m.pixel_count() + m.time_embed_dim);
  for (std::size_t i = 0; i < x_t.rows; ++i) {
    double* dst = input.row_ptr(i);
    const double* src = x_t.row_ptr(i);
    std::copy(src, src + x_t.cols, dst);
    const auto emb = time_embedding(ts[i], sched.T, m.time_embed_dim);
    std::copy(emb.begin(), emb.end(), dst + x_t.cols);
  }
  return input;
}

void check_step(std::size_t t, const NoiseSchedule& sched, const char* op) {
  if (t < 1 || t > sched.T) {
    throw ParameterError(std::string(op) + ": step t=" + std::to_string(t) +
                         " outside 1.." + std::to_string(sched.T));
  }
}

}  // namespace

Tensor2 trunk_features(const DenoiserModel& m, const Tensor2& x_t,
                       std::size_t t, const NoiseSchedule& sched) {
  m.check_consistent();
  check_step(t, sched, "trunk_features");
  const std::vector<std::size_t> ts(x_t.rows, t);
  return forward_value(m.trunk, assemble_input(m, x_t, ts, sched));
}

Tensor2 trunk_features_multi(const DenoiserModel& m, const Tensor2& x_t,
                             const std::vector<std::size_t>& ts,
                             const NoiseSchedule& sched) {
  m.check_consistent();
  for (std::size_t t : ts) check_step(t, sched, "trunk_features");
  return forward_value(m.trunk, assemble_input(m, x_t, ts, sched));
}

Tensor2 predict_eps(const DenoiserModel& m, const Tensor2& x_t, std::size_t t,
                    const NoiseSchedule& sched) {
  Tensor2 h = trunk_features(m, x_t, t, sched);
  Tensor2 eps = matmul_nt(h, m.head.weight);
  add_row_vector(eps, m.head.bias);
  return eps;
}

Tensor2 predict_eps_with_head(const DenoiserModel& m, const DenseLayer& head,
                              const Tensor2& x_t, std::size_t t,
                              const NoiseSchedule& sched) {
  Tensor2 h = trunk_features(m, x_t, t, sched);
  Tensor2 eps = matmul_nt(h, head.weight);
  add_row_vector(eps, head.bias);
  return eps;
}

std::vector<double> forward_sample(const std::vector<double>& x0,
                                   std::size_t t,
                                   const std::vector<double>& eps,
                                   const NoiseSchedule& sched) {
  check_step(t, sched, "forward_sample");
  if (x0.size() != eps.size()) {
    throw ShapeError("forward_sample: x0 and eps sizes differ");
  }
  const double ab = sched.alpha_bar[t];
  const double cs = std::sqrt(ab);
  const double cn = std::sqrt(1.0 - ab);
  std::vector<double> xt(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) {
    xt[i] = cs * x0[i] + cn * eps[i];
  }
  return xt;
}

Tensor2 ddim_from_eps(const Tensor2& x_t, const Tensor2& eps_hat,
                      std::size_t t, std::size_t t_prev, const DDIMConfig& cfg,
                      const NoiseSchedule& sched, Rng* step_noise) {
  check_step(t, sched, "ddim_step");
  if (t_prev >= t) {
    throw ParameterError("ddim_step: t_prev must be < t");
  }
  if (!x_t.same_shape(eps_hat)) {
    throw ShapeError("ddim_step: x_t and eps_hat shapes differ");
  }
  const double ab_t = sched.alpha_bar[t];
  const double sqrt_ab_t = std::sqrt(ab_t);
  const double sqrt_1m_ab_t = std::sqrt(1.0 - ab_t);

  Tensor2 x0_hat(x_t.rows, x_t.cols);
  for (std::size_t i = 0; i < x_t.data.size(); ++i) {
    x0_hat.data[i] = (x_t.data[i] - sqrt_1m_ab_t * eps_hat.data[i]) / sqrt_ab_t;
  }
  if (cfg.target == DdimTarget::kX0Estimate) return x0_hat;

  const double ab_prev = sched.alpha_bar[t_prev];
  const double sigma2 = cfg.sigma * cfg.sigma;
  const double coef_x0 = std::sqrt(ab_prev);
  const double coef_eps = std::sqrt(std::max(0.0, 1.0 - ab_prev - sigma2));
  Tensor2 out(x_t.rows, x_t.cols);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    out.data[i] = coef_x0 * x0_hat.data[i] + coef_eps * eps_hat.data[i];
  }
  if (cfg.sigma > 0.0) {
    if (step_noise == nullptr) {
      throw ParameterError("ddim_step: sigma > 0 requires a noise source");
    }
    for (auto& v : out.data) v += cfg.sigma * step_noise->normal();
  }
  return out;
}

std::vector<double> ddim_step(const DenoiserModel& m,
                              const std::vector<double>& x_t, std::size_t t,
                              std::size_t t_prev, const DDIMConfig& cfg,
                              const NoiseSchedule& sched, Rng* step_noise) {
  Tensor2 row = Tensor2::from_row(x_t);
  Tensor2 eps = predict_eps(m, row, t, sched);
  Tensor2 out = ddim_from_eps(row, eps, t, t_prev, cfg, sched, step_noise);
  return out.row(0);
}

double denoiser_loss_and_grads(const DenoiserModel& m, const Tensor2& x0_rows,
                               const std::vector<std::size_t>& ts,
                               const Tensor2& eps_rows,
                               const NoiseSchedule& sched,
                               std::vector<LayerGrads>* trunk_grads,
                               LayerGrads* head_grads) {
  m.check_consistent();
  if (!x0_rows.same_shape(eps_rows)) {
    throw ShapeError("denoiser loss: x0 and eps shapes differ");
  }
  for (std::size_t t : ts) check_step(t, sched, "denoiser loss");

  // Noised inputs.
  Tensor2 x_t(x0_rows.rows, x0_rows.cols);
  for (std::size_t i = 0; i < x0_rows.rows; ++i) {
    const double ab = sched.alpha_bar[ts[i]];
    const double cs = std::sqrt(ab);
    const double cn = std::sqrt(1.0 - ab);
    const double* x0 = x0_rows.row_ptr(i);
    const double* ep = eps_rows.row_ptr(i);
    double* xt = x_t.row_ptr(i);
    for (std::size_t j = 0; j < x0_rows.cols; ++j) {
      xt[j] = cs * x0[j] + cn * ep[j];
    }
  }

  // Trunk and head as one stack.
  std::vector<DenseLayer> stack = m.trunk;
  stack.push_back(m.head);
  ForwardCache cache = forward(stack, assemble_input(m, x_t, ts, sched));

  const double inv_n = 1.0 / static_cast<double>(cache.output.data.size());
  double loss = 0.0;
  Tensor2 upstream(cache.output.rows, cache.output.cols);
  for (std::size_t i = 0; i < cache.output.data.size(); ++i) {
    const double r = cache.output.data[i] - eps_rows.data[i];
    loss += r * r;
    upstream.data[i] = 2.0 * r * inv_n;
  }
  loss *= inv_n;

  if (trunk_grads != nullptr || head_grads != nullptr) {
    BackwardResult back = backward(stack, cache, upstream);
    if (head_grads != nullptr) *head_grads = std::move(back.layers.back());
    if (trunk_grads != nullptr) {
      back.layers.pop_back();
      *trunk_grads = std::move(back.layers);
    }
  }
  return loss;
}

DiffusionTrainResult train_denoiser(
    const std::vector<std::vector<double>>& images, const NoiseSchedule& sched,
    const DiffusionTrainConfig& cfg, std::uint64_t seed) {
  if (images.empty()) throw DataError("train_denoiser: empty dataset");
  const std::size_t pixels = images.front().size();
  const std::size_t side = static_cast<std::size_t>(
      std::llround(std::sqrt(static_cast<double>(pixels))));
  if (side * side != pixels) {
    throw ShapeError("train_denoiser: images must be square");
  }
  for (const auto& img : images) {
    if (img.size() != pixels) {
      throw ShapeError("train_denoiser: inconsistent image sizes");
    }
  }

  Rng root(seed);
  Rng init_rng = root.stream("init");
  Rng noise_rng = root.stream("noise");
  Rng order_rng = root.stream("pairs");

  DiffusionTrainResult result;
  result.model = make_denoiser(side, cfg.hidden, cfg.time_embed_dim, init_rng);
  DenoiserModel& model = result.model;

  std::vector<DenseLayer> stack = model.trunk;
  stack.push_back(model.head);
  AdamConfig adam_cfg;
  adam_cfg.lr = cfg.lr;
  AdamOptimizer opt(layer_param_refs(stack), adam_cfg);

  std::vector<std::size_t> order(images.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    order_rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const std::size_t b = std::min(cfg.batch, order.size() - start);
      Tensor2 x0(b, pixels);
      Tensor2 eps(b, pixels);
      std::vector<std::size_t> ts(b);
      for (std::size_t i = 0; i < b; ++i) {
        const auto& img = images[order[start + i]];
        std::copy(img.begin(), img.end(), x0.row_ptr(i));
        ts[i] = static_cast<std::size_t>(
            noise_rng.uniform_int(1, static_cast<int>(sched.T)));
        double* e = eps.row_ptr(i);
        for (std::size_t j = 0; j < pixels; ++j) e[j] = noise_rng.normal();
      }

      std::vector<LayerGrads> trunk_g;
      LayerGrads head_g;
      const double loss = denoiser_loss_and_grads(model, x0, ts, eps, sched,
                                                  &trunk_g, &head_g);
      if (!std::isfinite(loss)) {
        throw TrainingDivergenceError("train_denoiser: non-finite loss");
      }
      epoch_loss += loss;
      ++batches;

      std::vector<GradRef> grad_refs;
      for (auto& g : trunk_g) {
        grad_refs.push_back({g.dweight.data.data(), g.dweight.data.size()});
        grad_refs.push_back({g.dbias.data(), g.dbias.size()});
      }
      grad_refs.push_back(
          {head_g.dweight.data.data(), head_g.dweight.data.size()});
      grad_refs.push_back({head_g.dbias.data(), head_g.dbias.size()});

      std::vector<ParamRef> param_refs;
      for (auto& layer : model.trunk) {
        param_refs.push_back(
            {layer.weight.data.data(), layer.weight.data.size()});
        param_refs.push_back({layer.bias.data(), layer.bias.size()});
      }
      param_refs.push_back(
          {model.head.weight.data.data(), model.head.weight.data.size()});
      param_refs.push_back({model.head.bias.data(), model.head.bias.size()});

      opt.step(param_refs, grad_refs);
    }
    result.loss_curve.push_back(epoch_loss / static_cast<double>(batches));
  }
  return result;
}

std::vector<std::vector<double>> generate(const DenoiserModel& m,
                                          const NoiseSchedule& sched,
                                          const DDIMConfig& cfg, std::size_t n,
                                          std::uint64_t seed) {
  m.check_consistent();
  validate_ddim_subset(sched);
  if (n == 0) return {};

  Rng noise_rng = Rng(seed).stream("noise");
  const std::size_t pixels = m.pixel_count();
  Tensor2 x(n, pixels);
  for (auto& v : x.data) v = noise_rng.normal();

  DDIMConfig walk_cfg = cfg;
  walk_cfg.target = DdimTarget::kPrevStep;  // chaining; final step hits ab=1
  const auto& subset = sched.ddim_subset;
  for (std::size_t k = subset.size(); k-- > 0;) {
    const std::size_t t = subset[k];
    const std::size_t t_prev = (k > 0) ? subset[k - 1] : 0;
    Tensor2 eps = predict_eps(m, x, t, sched);
    x = ddim_from_eps(x, eps, t, t_prev, walk_cfg, sched,
                      cfg.sigma > 0.0 ? &noise_rng : nullptr);
  }
  require_finite(x, "generate");

  std::vector<std::vector<double>> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = x.row(i);
  return out;
}

}  // namespace deua
