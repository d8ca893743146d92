#pragma once

#include <array>
#include <cstdint>

#include <json.hpp>

#include "loglo/autodiff.hpp"
#include "loglo/spectra.hpp"

namespace loglo {

enum class Reduction { mean, sum };

struct LossConfig {
  double lambda = 0.1;
  std::array<bool, 3> bands_penalized{false, true, true};  // low, mid, high
  Reduction reduction = Reduction::mean;
  double noise_alpha = 0.025;
  double sphere_alpha = 1.0;
  double sphere_p = 2.0;
  Index i_low = 4;    // radial band cutoffs used to build the RadialSpec
  Index i_high = 12;

  void validate() const;
  nlohmann::json to_json() const;
  static LossConfig from_json(const nlohmann::json& j);
};

/// Mean of squared differences over every element.
ad::Var mse(const ad::Var& pred, const ad::Var& target);

struct FreqLossVar {
  ad::Var loss;
  BandErrors bands;  // one entry per channel (time folded into channels)
};

/// Radially binned spectral error loss. Channels carry any folded time axis.
/// `lx`, `ly` are the physical domain lengths.
FreqLossVar radial_freq_loss(const ad::Var& pred, const ad::Var& target, const RadialSpec& spec,
                             const LossConfig& cfg, double lx, double ly);

struct FreqLossValue {
  double loss = 0.0;
  BandErrors bands;
};

FreqLossValue radial_freq_loss(const Field& pred, const Field& target, const RadialSpec& spec,
                               const LossConfig& cfg);

/// Patchwise high-frequency weighted residual energy (ortho FFT per patch).
ad::Var sphere_loss(const ad::Var& pred, const ad::Var& target, Index patch, const LossConfig& cfg);
double sphere_loss(const Field& pred, const Field& target, Index patch, const LossConfig& cfg);

/// Per-patch frequency weights 1 + alpha (FM / (max FM + 1e-8))^p on the
/// full two-sided p x p grid.
RealTensor sphere_weights(Index patch, double alpha, double p);

struct CombinedLoss {
  ad::Var total;
  ad::Var mse;
  ad::Var freq;  // invalid when lambda == 0
};

/// MSE + lambda * radial_freq_loss.
CombinedLoss combined_loss(const ad::Var& pred, const ad::Var& target, const LossConfig& cfg,
                           const RadialSpec& spec, double lx, double ly);
double combined_loss(const Field& pred, const Field& target, const LossConfig& cfg,
                     const RadialSpec& spec);

/// mu_b + alpha sigma_b N(0, 1) with per-sample statistics over every
/// non-batch axis and sigma_b = std + 1e-8.
Field adaptive_noise(const Field& x_hf, double alpha, std::uint64_t seed);

}  // namespace loglo
