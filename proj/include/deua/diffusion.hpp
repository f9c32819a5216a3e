#pragma once

#include <cstdint>
#include <vector>

#include "deua/nn.hpp"
#include "deua/rng.hpp"
#include "deua/tensor.hpp"

namespace deua {

/// Cumulative signal coefficients for a T-step forward process.
/// alpha_bar[t] = prod_{s<=t} (1 - beta_s), alpha_bar[0] = 1.
struct NoiseSchedule {
  std::size_t T = 0;
  double beta_start = 0.0;
  double beta_end = 0.0;
  std::vector<double> alpha_bar;          // T+1 entries, strictly decreasing
  std::vector<std::size_t> ddim_subset;   // strictly increasing steps in 1..T
};

/// Linear-beta schedule; beta_t interpolates beta_start..beta_end over 1..T.
NoiseSchedule make_schedule(std::size_t T, double beta_start, double beta_end);

/// S evenly spaced reverse steps ending at T.
std::vector<std::size_t> make_ddim_subset(std::size_t T, std::size_t S);
void validate_ddim_subset(const NoiseSchedule& sched);

/// Sinusoidal features of t/T: pairs sin/cos at frequencies pi * 2^k.
std::vector<double> time_embedding(std::size_t t, std::size_t T,
                                   std::size_t dim);

/// Time-conditioned MLP predicting the injected noise. The head is the
/// Bayesian subnetwork the Laplace module operates on.
struct DenoiserModel {
  std::size_t image_size = 16;  // square, pixel count = image_size^2
  std::size_t time_embed_dim = 16;
  std::vector<DenseLayer> trunk;  // [pixels ++ time embedding] -> hidden
  DenseLayer head;                // hidden -> pixels, identity activation

  std::size_t pixel_count() const { return image_size * image_size; }
  void check_consistent() const;  // StateError if dimensions do not chain
};

DenoiserModel make_denoiser(std::size_t image_size,
                            const std::vector<std::size_t>& hidden,
                            std::size_t time_embed_dim, Rng& rng);

/// Hidden activations h for a batch of noisy rows at a common step t.
Tensor2 trunk_features(const DenoiserModel& m, const Tensor2& x_t,
                       std::size_t t, const NoiseSchedule& sched);
/// Same with one step index per row.
Tensor2 trunk_features_multi(const DenoiserModel& m, const Tensor2& x_t,
                             const std::vector<std::size_t>& ts,
                             const NoiseSchedule& sched);

/// eps_theta(x_t, t) for a batch of rows.
Tensor2 predict_eps(const DenoiserModel& m, const Tensor2& x_t, std::size_t t,
                    const NoiseSchedule& sched);
/// Same but with a substituted head (posterior weight realization).
Tensor2 predict_eps_with_head(const DenoiserModel& m, const DenseLayer& head,
                              const Tensor2& x_t, std::size_t t,
                              const NoiseSchedule& sched);

/// x_t = sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps.
std::vector<double> forward_sample(const std::vector<double>& x0,
                                   std::size_t t,
                                   const std::vector<double>& eps,
                                   const NoiseSchedule& sched);

enum class DdimTarget { kPrevStep, kX0Estimate };

struct DDIMConfig {
  double sigma = 0.0;  // 0 => deterministic reverse step
  DdimTarget target = DdimTarget::kPrevStep;
};

/// One reverse step given a precomputed eps prediction (rows).
/// x0_hat = (x_t - sqrt(1-ab_t) eps_hat) / sqrt(ab_t); prev-step output is
/// sqrt(ab_prev) x0_hat + sqrt(1-ab_prev-sigma^2) eps_hat + sigma eps_t.
Tensor2 ddim_from_eps(const Tensor2& x_t, const Tensor2& eps_hat,
                      std::size_t t, std::size_t t_prev,
                      const DDIMConfig& cfg, const NoiseSchedule& sched,
                      Rng* step_noise = nullptr);

std::vector<double> ddim_step(const DenoiserModel& m,
                              const std::vector<double>& x_t, std::size_t t,
                              std::size_t t_prev, const DDIMConfig& cfg,
                              const NoiseSchedule& sched,
                              Rng* step_noise = nullptr);

struct DiffusionTrainConfig {
  std::vector<std::size_t> hidden = {128, 128};
  std::size_t time_embed_dim = 16;
  std::size_t epochs = 30;
  std::size_t batch = 64;
  double lr = 1e-3;
};

struct DiffusionTrainResult {
  DenoiserModel model;
  std::vector<double> loss_curve;  // per-epoch mean of |eps - eps_hat|^2
};

/// Trains the eps-predictor on flattened images with uniformly sampled t and
/// Gaussian noise. Deterministic given seed.
DiffusionTrainResult train_denoiser(const std::vector<std::vector<double>>& images,
                                    const NoiseSchedule& sched,
                                    const DiffusionTrainConfig& cfg,
                                    std::uint64_t seed);

/// Mean squared training loss and its gradient w.r.t. all model parameters
/// for a fixed (images, t, eps) batch; used by training and gradient checks.
double denoiser_loss_and_grads(const DenoiserModel& m,
                               const Tensor2& x0_rows,
                               const std::vector<std::size_t>& ts,
                               const Tensor2& eps_rows,
                               const NoiseSchedule& sched,
                               std::vector<LayerGrads>* trunk_grads,
                               LayerGrads* head_grads);

/// Draws x_T ~ N(0, I) and walks the reversed DDIM subset. Pure function of
/// (model, schedule, config, n, seed).
std::vector<std::vector<double>> generate(const DenoiserModel& m,
                                          const NoiseSchedule& sched,
                                          const DDIMConfig& cfg, std::size_t n,
                                          std::uint64_t seed);

}  // namespace deua
