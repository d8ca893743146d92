#include "loglo/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>

#include "json_util.hpp"

namespace loglo {

using nlohmann::json;

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over a combined word
  std::uint64_t z = a * 0x9E3779B97F4A7C15ull + b + 0x632BE59BD9B4E019ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("train.lr must be a finite non-negative number");
  if (step_epochs < 1) throw ConfigError("train.step_epochs must be positive");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("train.gamma must lie in (0, 1]");
  if (!(clip_max_norm > 0.0)) throw ConfigError("train.clip_max_norm must be positive");
  if (epochs < 0) throw ConfigError("train.epochs must be non-negative");
  if (batch_size < 1) throw ConfigError("train.batch_size must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("train: betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw ConfigError("train.eps must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("train.weight_decay must be non-negative");
  if (checkpoint_every < 0) throw ConfigError("train.checkpoint_every must be non-negative");
  loss.validate();
}

json TrainConfig::to_json() const {
  return json{{"optimizer", optimizer == OptimizerKind::adam ? "adam" : "adamw"},
              {"lr", lr},
              {"step_epochs", step_epochs},
              {"gamma", gamma},
              {"clip_max_norm", clip_max_norm},
              {"epochs", epochs},
              {"batch_size", batch_size},
              {"noise", noise},
              {"seed", seed},
              {"betas", {beta1, beta2}},
              {"eps", eps},
              {"weight_decay", weight_decay},
              {"checkpoint_every", checkpoint_every}};
}

TrainConfig TrainConfig::from_json(const json& j) {
  detail::ObjectReader r(j, "train");
  TrainConfig c;
  const std::string opt = r.get_string("optimizer", "adam");
  if (opt == "adam") {
    c.optimizer = OptimizerKind::adam;
  } else if (opt == "adamw") {
    c.optimizer = OptimizerKind::adamw;
  } else {
    throw ConfigError("train.optimizer: expected \"adam\" or \"adamw\"");
  }
  c.lr = r.get_number("lr", c.lr);
  c.step_epochs = r.get_int("step_epochs", c.step_epochs);
  c.gamma = r.get_number("gamma", c.gamma);
  c.clip_max_norm = r.get_number("clip_max_norm", c.clip_max_norm);
  c.epochs = r.get_int("epochs", c.epochs);
  c.batch_size = r.get_int("batch_size", c.batch_size);
  c.noise = r.get_bool("noise", c.noise);
  const long long seed = r.get_int("seed", 0);
  if (seed < 0) throw ConfigError("train.seed must be non-negative");
  c.seed = static_cast<std::uint64_t>(seed);
  if (r.has("betas")) {
    const json& b = r.raw("betas");
    if (!b.is_array() || b.size() != 2 || !b[0].is_number() || !b[1].is_number()) {
      throw ConfigError("train.betas: expected two numbers");
    }
    c.beta1 = b[0].get<double>();
    c.beta2 = b[1].get<double>();
  }
  c.eps = r.get_number("eps", c.eps);
  c.weight_decay = r.get_number("weight_decay", c.weight_decay);
  c.checkpoint_every = r.get_int("checkpoint_every", c.checkpoint_every);
  r.finish();
  c.validate();
  return c;
}

void optimizer_step(std::span<RealTensor> params, std::span<const RealTensor> grads, OptimizerState& state,
                    const TrainConfig& cfg, double lr) {
  if (params.size() != grads.size()) throw ShapeError("optimizer_step: parameter and gradient counts differ");
  if (state.m.empty()) {
    for (const RealTensor& p : params) {
      state.m.emplace_back(p.shape());
      state.v.emplace_back(p.shape());
    }
  }
  if (state.m.size() != params.size()) throw ShapeError("optimizer_step: state does not match parameters");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_same_shape(params[i].shape(), grads[i].shape(), "optimizer_step");
    auto& p = params[i].array();
    const auto& g = grads[i].array();
    auto& m = state.m[i].array();
    auto& v = state.v[i].array();
    if (cfg.optimizer == OptimizerKind::adamw) p *= 1.0 - lr * cfg.weight_decay;
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.square();
    p -= lr * (m / bc1) / ((v / bc2).sqrt() + cfg.eps);
  }
}

void optimizer_step(LogloModel& model, std::span<const RealTensor> grads, OptimizerState& state,
                    const TrainConfig& cfg, double lr) {
  std::vector<RealTensor> values = model.values();
  optimizer_step(values, grads, state, cfg, lr);
  model.set_values(values);
}

double lr_at(Index epoch, const TrainConfig& cfg) {
  return cfg.lr * std::pow(cfg.gamma, static_cast<double>(epoch / cfg.step_epochs));
}

double global_norm(std::span<const RealTensor> grads) {
  double sq = 0.0;
  for (const RealTensor& g : grads) sq += g.array().square().sum();
  return std::sqrt(sq);
}

double clip_grad_norm(std::span<RealTensor> grads, double max_norm) {
  const double norm = global_norm(grads);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (RealTensor& g : grads) g.array() *= s;
  }
  return norm;
}

Field gather_batch(const Field& f, std::span<const Index> idx) {
  const Index per = f.values().size() / f.batch();
  Field out(static_cast<Index>(idx.size()), f.channels(), f.nx(), f.ny(), f.lx(), f.ly());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] < 0 || idx[k] >= f.batch()) throw InvalidInput("gather_batch: index out of range");
    out.array().segment(static_cast<Index>(k) * per, per) = f.array().segment(idx[k] * per, per);
  }
  return out;
}

BatchResult batch_gradients(const LogloModel& model, const Field& inputs, const Field& targets,
                            const TrainConfig& cfg, const RadialSpec& spec, const Field* noise) {
  ad::Tape tape;
  const ModelVars p = ModelVars::bind(model, tape, true);
  const ad::Var x = tape.constant(inputs.values());
  const ad::Var y = tape.constant(targets.values());
  const ad::Var pred = model_forward(x, p, noise ? &noise->values() : nullptr);
  const CombinedLoss l = combined_loss(pred, y, cfg.loss, spec, targets.lx(), targets.ly());
  BatchResult r;
  r.loss = l.total.item();
  r.mse = l.mse.item();
  r.freq = l.freq.valid() ? l.freq.item() : 0.0;
  if (!std::isfinite(r.loss)) return r;
  tape.backward(l.total);
  for (const ad::Var& v : p.all()) r.grads.push_back(tape.grad(v));
  return r;
}

EpochStats train_one_step_epoch(LogloModel& model, const PairSet& pairs, const TrainConfig& cfg,
                                const RadialSpec& spec, OptimizerState& state, Index epoch) {
  const auto start = std::chrono::steady_clock::now();
  const Index n = pairs.size();
  if (n < 1) throw InvalidInput("train: empty pair set");
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(mix(cfg.seed, static_cast<std::uint64_t>(epoch)));
  std::shuffle(order.begin(), order.end(), rng);

  const double lr = lr_at(epoch, cfg);
  const ModelConfig& mc = model.config();
  EpochStats s;
  s.epoch = epoch;
  s.lr = lr;
  for (Index b0 = 0, batch = 0; b0 < n; b0 += cfg.batch_size, ++batch) {
    const Index b1 = std::min(n, b0 + cfg.batch_size);
    const std::span<const Index> idx(order.data() + b0, static_cast<std::size_t>(b1 - b0));
    const Field x = gather_batch(pairs.inputs, idx);
    const Field y = gather_batch(pairs.targets, idx);
    std::optional<Field> noise;
    if (cfg.noise) {
      const Field hf = hfp_extract(x, mc.hfp_kernel, mc.hfp_stride, mc.hfp_interp);
      noise = adaptive_noise(hf, cfg.loss.noise_alpha,
                             mix(mix(cfg.seed, static_cast<std::uint64_t>(epoch)), static_cast<std::uint64_t>(batch)));
    }
    BatchResult r = batch_gradients(model, x, y, cfg, spec, noise ? &*noise : nullptr);
    if (!std::isfinite(r.loss)) {
      throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batch));
    }
    clip_grad_norm(r.grads, cfg.clip_max_norm);
    optimizer_step(model, r.grads, state, cfg, lr);
    const double w = static_cast<double>(b1 - b0);
    s.train_loss += w * r.loss;
    s.mse_part += w * r.mse;
    s.freq_part += w * r.freq;
  }
  s.train_loss /= static_cast<double>(n);
  s.mse_part /= static_cast<double>(n);
  s.freq_part /= static_cast<double>(n);
  s.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return s;
}

TrainLog::TrainLog(const std::string& path) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  out_.open(path, std::ios::app);
  if (!out_) throw IoError("cannot open training log " + path);
  if (fresh) out_ << "epoch,lr,train_loss,mse_part,freq_part,wall_ms\n";
  out_.flush();
}

void TrainLog::append(const EpochStats& s) {
  char line[256];
  std::snprintf(line, sizeof line, "%lld,%.17g,%.17g,%.17g,%.17g,%.3f\n", static_cast<long long>(s.epoch), s.lr,
                s.train_loss, s.mse_part, s.freq_part, s.wall_ms);
  out_ << line;
  out_.flush();
  if (!out_) throw IoError("failed writing training log");
}

std::vector<EpochStats> train(LogloModel& model, const PairSet& pairs, const TrainConfig& cfg,
                              const TrainOptions& opts) {
  cfg.validate();
  model.config().check_grid(pairs.inputs.nx(), pairs.inputs.ny());
  const RadialSpec spec =
      radial_bin_map(pairs.inputs.nx(), pairs.inputs.ny(), cfg.loss.i_low, cfg.loss.i_high);
  std::optional<TrainLog> log;
  if (!opts.out_dir.empty()) {
    std::filesystem::create_directories(opts.out_dir);
    log.emplace((std::filesystem::path(opts.out_dir) / "train_log.csv").string());
  }
  OptimizerState state;
  std::vector<EpochStats> stats;
  for (Index e = 0; e < cfg.epochs; ++e) {
    stats.push_back(train_one_step_epoch(model, pairs, cfg, spec, state, e));
    if (log) log->append(stats.back());
    if (opts.on_epoch) opts.on_epoch(stats.back());
    if (!opts.out_dir.empty() && cfg.checkpoint_every > 0 && (e + 1) % cfg.checkpoint_every == 0 &&
        e + 1 != cfg.epochs) {
      save_checkpoint(model, opts.out_dir, e + 1);
    }
  }
  if (!opts.out_dir.empty()) save_checkpoint(model, opts.out_dir, cfg.epochs);
  return stats;
}

Field predict(const LogloModel& model, const Field& inputs, Index batch_size) {
  if (batch_size < 1) throw InvalidInput("predict: batch_size must be positive");
  const Index n = inputs.batch();
  const Index per_in = inputs.values().size() / n;
  Field out;
  Index per_out = 0;
  for (Index b0 = 0; b0 < n; b0 += batch_size) {
    const Index b1 = std::min(n, b0 + batch_size);
    Field x(b1 - b0, inputs.channels(), inputs.nx(), inputs.ny(), inputs.lx(), inputs.ly());
    x.array() = inputs.array().segment(b0 * per_in, (b1 - b0) * per_in);
    const Field y = model_forward(x, model);
    if (b0 == 0) {
      out = Field(n, y.channels(), y.nx(), y.ny(), y.lx(), y.ly());
      per_out = y.values().size() / y.batch();
    }
    out.array().segment(b0 * per_out, (b1 - b0) * per_out) = y.array();
  }
  return out;
}

Rollout rollout(const LogloModel& model, const Field& u0, Index n_steps) {
  if (n_steps < 1) throw InvalidInput("rollout: n_steps must be at least 1");
  if (model.config().in_channels != model.config().out_channels) {
    throw ConfigError("rollout needs in_channels == out_channels");
  }
  Rollout r;
  Field u = u0;
  for (Index s = 1; s <= n_steps; ++s) {
    u = model_forward(u, model);
    if (!u.values().all_finite()) {
      r.blowup_step = s;
      break;
    }
    r.frames.push_back(u);
  }
  return r;
}

}  // namespace loglo
