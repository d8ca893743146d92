#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "loglo/datagen.hpp"
#include "loglo/losses.hpp"
#include "loglo/operator.hpp"

namespace loglo {

enum class OptimizerKind { adam, adamw };

struct TrainConfig {
  OptimizerKind optimizer = OptimizerKind::adam;
  double lr = 1e-3;
  Index step_epochs = 33;
  double gamma = 0.5;
  double clip_max_norm = 1.0;
  Index epochs = 100;
  Index batch_size = 4;
  LossConfig loss;
  bool noise = false;  // alpha lives in loss.noise_alpha
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;  // AdamW only
  Index checkpoint_every = 0;  // 0: final checkpoint only

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

struct OptimizerState {
  Index step = 0;
  std::vector<RealTensor> m;
  std::vector<RealTensor> v;
};

/// One Adam / AdamW update with bias correction at learning rate `lr`.
void optimizer_step(std::span<RealTensor> params, std::span<const RealTensor> grads, OptimizerState& state,
                    const TrainConfig& cfg, double lr);
void optimizer_step(LogloModel& model, std::span<const RealTensor> grads, OptimizerState& state,
                    const TrainConfig& cfg, double lr);

/// lr * gamma^floor(epoch / step_epochs), epochs counted from 0.
double lr_at(Index epoch, const TrainConfig& cfg);

double global_norm(std::span<const RealTensor> grads);
/// Rescales in place when the global L2 norm exceeds max_norm; returns the
/// norm before clipping.
double clip_grad_norm(std::span<RealTensor> grads, double max_norm);

struct EpochStats {
  Index epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;  // sample-weighted means over the epoch
  double mse_part = 0.0;
  double freq_part = 0.0;   // unweighted frequency loss; total = mse + lambda * freq
  double wall_ms = 0.0;
};

/// Loss and gradients of one batch (no update).
struct BatchResult {
  double loss = 0.0;
  double mse = 0.0;
  double freq = 0.0;
  std::vector<RealTensor> grads;
};

BatchResult batch_gradients(const LogloModel& model, const Field& inputs, const Field& targets,
                            const TrainConfig& cfg, const RadialSpec& spec, const Field* noise = nullptr);

/// Rows `idx` of a batched field.
Field gather_batch(const Field& f, std::span<const Index> idx);

/// One teacher-forcing pass over shuffled (u_t, u_t+1) pairs. A non-finite
/// batch loss throws DivergenceError before that batch's update.
EpochStats train_one_step_epoch(LogloModel& model, const PairSet& pairs, const TrainConfig& cfg,
                                const RadialSpec& spec, OptimizerState& state, Index epoch);

/// Append-only CSV: epoch,lr,train_loss,mse_part,freq_part,wall_ms.
class TrainLog {
 public:
  explicit TrainLog(const std::string& path);
  void append(const EpochStats& s);

 private:
  std::ofstream out_;
};

struct TrainOptions {
  std::string out_dir;  // empty: no log or checkpoints
  std::function<void(const EpochStats&)> on_epoch;
};

/// Full run over cfg.epochs. Writes train_log.csv and checkpoints under
/// out_dir (every checkpoint_every epochs and at the end).
std::vector<EpochStats> train(LogloModel& model, const PairSet& pairs, const TrainConfig& cfg,
                              const TrainOptions& opts = {});

/// Batched inference over every sample of `inputs`.
Field predict(const LogloModel& model, const Field& inputs, Index batch_size = 16);

struct Rollout {
  std::vector<Field> frames;  // predictions for steps 1..n (truncated at blow-up)
  Index blowup_step = -1;     // first step (1-based) with a non-finite prediction
};

Rollout rollout(const LogloModel& model, const Field& u0, Index n_steps);

}  // namespace loglo
