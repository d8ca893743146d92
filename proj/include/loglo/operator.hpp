#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "loglo/autodiff.hpp"
#include "loglo/patching.hpp"
#include "loglo/resample.hpp"

namespace loglo {

struct ModelConfig {
  Index in_channels = 1;
  Index out_channels = 1;
  Index width = 65;      // d_c
  Index n_layers = 4;    // L
  Index modes_x = 40;    // Kx
  Index modes_y = 40;    // Ky, retained as Ky/2+1 half-spectrum bins
  Index patch = 16;      // p; the local branch keeps all (p, p/2+1) modes
  bool use_local = true;
  bool use_hfp = true;
  bool append_coord_grid = false;
  Index hfp_kernel = 4;
  Index hfp_stride = 4;
  InterpMode hfp_interp = InterpMode::nearest;

  Index lift_channels() const { return in_channels + (append_coord_grid ? 2 : 0); }
  Index ky_bins() const { return modes_y / 2 + 1; }
  void validate() const;
  /// Checks a grid against the configured modes, patch and pooling.
  void check_grid(Index nx, Index ny) const;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
  bool operator==(const ModelConfig&) const = default;
};

struct NamedParam {
  std::string name;
  RealTensor value;
};

/// Parameter container for the LOGLO-FNO. Complex spectral weights are
/// stored as real [modes_x, bins_y, d_c, d_c, 2] arrays.
class LogloModel {
 public:
  LogloModel(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  std::vector<NamedParam>& params() { return params_; }
  const std::vector<NamedParam>& params() const { return params_; }

  bool has(std::string_view name) const;
  Index index_of(std::string_view name) const;
  const RealTensor& param(std::string_view name) const;
  RealTensor& param(std::string_view name);

  std::vector<RealTensor> values() const;
  void set_values(std::span<const RealTensor> values);

 private:
  void add(std::string name, RealTensor value);

  ModelConfig config_;
  std::vector<NamedParam> params_;
};

/// Parameter tape leaves in model order, plus name lookup.
class ModelVars {
 public:
  ModelVars(const LogloModel& model, std::vector<ad::Var> vars)
      : model_(&model), vars_(std::move(vars)) {}
  /// Leaves as constants (inference) or variables (training).
  static ModelVars bind(const LogloModel& model, ad::Tape& tape, bool trainable);

  const ad::Var& operator[](std::string_view name) const;
  const std::vector<ad::Var>& all() const { return vars_; }
  const LogloModel& model() const { return *model_; }

 private:
  const LogloModel* model_;
  std::vector<ad::Var> vars_;
};

// ---- tape-level building blocks ------------------------------------------

/// Pointwise c -> d_c map over [b, c, ...] (used for all three streams).
ad::Var lift(const ad::Var& x, const ModelVars& p);
/// Spectral convolution over the last two axes of [b, c, ..., nx, ny] with
/// weights real [Kx, Ky/2+1, cout, cin, 2]. Internal transforms are ortho.
ad::Var spectral_conv(const ad::Var& z, const ad::Var& weights);
ad::Var channel_mlp(const ad::Var& z, const ModelVars& p, const std::string& prefix);
/// X - Interpolate(AvgPool(X)).
ad::Var hfp_extract(const ad::Var& x, Index kernel, Index stride, InterpMode mode);

struct LayerState {
  ad::Var z;        // full grid [b, d_c, nx, ny]
  ad::Var patches;  // [b, d_c, m, p, p]; invalid without the local branch
  ad::Var hf;       // Z' stream; invalid without HFP
};

LayerState loglo_layer(const LayerState& in, const ModelVars& p, Index layer, bool is_last);

/// Full model graph. `noise`, when given, is added to the raw input of the
/// full-grid and patch streams, never to the HFP stream.
ad::Var model_forward(const ad::Var& x, const ModelVars& p, const RealTensor* noise = nullptr);

/// Baseline stack built only from plain global spectral layers, for
/// checking that the ablated LOGLO model reduces to it.
ad::Var fno_forward(const ad::Var& x, const ModelVars& p);

// ---- field-level wrappers (inference, no gradient) -------------------------

Field lift(const Field& f, const LogloModel& m);
PatchSet lift(const PatchSet& ps, const LogloModel& m);
Field spectral_conv(const Field& z, const RealTensor& weights);
PatchSet local_spectral_conv(const PatchSet& ps, const RealTensor& weights);
Field soft_gating(const Field& z, const RealTensor& scale, const RealTensor& bias);
Field pointwise_conv(const Field& z, const RealTensor& w, const RealTensor& bias);
Field channel_mlp(const Field& z, const RealTensor& w1, const RealTensor& b1, const RealTensor& w2,
                  const RealTensor& b2);
Field hfp_extract(const Field& x, Index kernel = 4, Index stride = 4,
                  InterpMode mode = InterpMode::nearest);
Field model_forward(const Field& x, const LogloModel& m);
Field fno_forward(const Field& x, const LogloModel& m);

/// Complex [Kx, bins, cout, cin] weights packed into the real storage layout.
RealTensor pack_complex_weights(const ComplexTensor& w);

// ---- budgets and cost models ------------------------------------------------

struct ParamBudget {
  std::int64_t global_formula = 0;
  std::int64_t local_formula = 0;
};

/// Closed-form spectral weight budgets: global d_c^2 K^dim L, local
/// d_c^2 p (p/2+1) L in 2D and d_c^2 p p (p/2+1) L in 3D.
ParamBudget param_budget(int dim, std::int64_t width, std::int64_t modes, std::int64_t layers,
                         std::int64_t patch);

struct ParamCount {
  std::int64_t total = 0;
  std::int64_t global_spectral = 0;
  std::int64_t local_spectral = 0;
  std::map<std::string, std::int64_t> by_component;  // lift, global, local, hfp, projection
};

ParamCount count_params(const LogloModel& m);

struct FftFlops {
  double global_fwd = 0.0;
  double global_inv = 0.0;
  double local_fwd = 0.0;
  double local_inv = 0.0;
};

/// 5 N_b C N log2 N operation counts for forward and inverse transforms of
/// the global field and of p x p (x p) patches. nz is ignored in 2D.
FftFlops fft_flops(int dim, std::int64_t batch, std::int64_t c_in, std::int64_t c_out,
                   std::int64_t nx, std::int64_t ny, std::int64_t nz, std::int64_t patch);

// ---- checkpoints ----------------------------------------------------------------

/// Writes `checkpoint_<epoch>.json` (manifest) and `checkpoint_<epoch>.bin`
/// (little-endian float64 blob) into `dir`; returns the manifest path.
std::string save_checkpoint(const LogloModel& m, const std::string& dir, Index epoch);
/// Loads a manifest (or its .bin sibling). When `expected` is given, a
/// different stored config is a ConfigError.
LogloModel load_checkpoint(const std::string& path,
                           const std::optional<ModelConfig>& expected = std::nullopt);

}  // namespace loglo
