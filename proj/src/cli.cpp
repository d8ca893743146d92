#include "loglo/cli.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "json_util.hpp"
#include "loglo/metrics.hpp"
#include "loglo/runtime.hpp"

namespace loglo {

namespace fs = std::filesystem;
using nlohmann::json;

// ---- config ------------------------------------------------------------------------

void RunConfig::validate() const {
  if (pde != "heat" && pde != "advdiff" && pde != "kolmogorov") {
    throw ConfigError("pde: expected \"heat\", \"advdiff\" or \"kolmogorov\", got \"" + pde + "\"");
  }
  if (out_dir.empty()) throw ConfigError("out_dir must not be empty");
  const DataConfig& d = data;
  if (d.path.empty()) {
    if (d.n_traj < 1) throw ConfigError("data.n_traj must be positive");
    if (d.nx < 4 || d.ny < 4) throw ConfigError("data.nx and data.ny must be at least 4");
    if (d.n_t < 2) throw ConfigError("data.n_t must be at least 2");
    if (!(d.dt > 0.0)) throw ConfigError("data.dt must be positive");
    if (pde != "kolmogorov" && !(d.nu > 0.0)) throw ConfigError("data.nu must be positive");
    if (pde == "kolmogorov") {
      if (!(d.re > 0.0)) throw ConfigError("data.re must be positive");
      if (d.substeps < 1) throw ConfigError("data.substeps must be positive");
      if (d.forcing_n < 0) throw ConfigError("data.forcing_n must be non-negative");
      if (!(d.ic_scale >= 0.0)) throw ConfigError("data.ic_scale must be non-negative");
    }
    if (d.train_traj < 1 || d.train_traj > d.n_traj) throw ConfigError("data.train_traj must lie in [1, n_traj]");
  } else if (d.train_traj < 1) {
    throw ConfigError("data.train_traj must be positive");
  }
  model.validate();
  train.validate();
}

json RunConfig::to_json() const {
  json d{{"path", data.path},         {"n_traj", data.n_traj}, {"train_traj", data.train_traj},
         {"nx", data.nx},             {"ny", data.ny},         {"n_t", data.n_t},
         {"dt", data.dt},             {"nu", data.nu},         {"velocity", {data.velocity[0], data.velocity[1]}},
         {"re", data.re},             {"forcing_n", data.forcing_n},
         {"substeps", data.substeps}, {"ic_scale", data.ic_scale}};
  return json{{"pde", pde},
              {"seed", seed},
              {"out_dir", out_dir},
              {"data", d},
              {"model", model.to_json()},
              {"train", train.to_json()},
              {"loss", train.loss.to_json()}};
}

RunConfig RunConfig::from_json(const json& j) {
  detail::ObjectReader r(j, "");
  RunConfig c;
  c.pde = r.get_string("pde", c.pde);
  const long long seed = r.get_int("seed", 0);
  if (seed < 0) throw ConfigError("seed must be non-negative");
  c.seed = static_cast<std::uint64_t>(seed);
  c.out_dir = r.get_string("out_dir", c.out_dir);

  detail::ObjectReader d = r.child("data");
  DataConfig& dc = c.data;
  dc.path = d.get_string("path", dc.path);
  dc.n_traj = d.get_int("n_traj", dc.n_traj);
  dc.train_traj = d.get_int("train_traj", std::min<Index>(dc.train_traj, dc.n_traj));
  dc.nx = d.get_int("nx", dc.nx);
  dc.ny = d.get_int("ny", dc.ny);
  dc.n_t = d.get_int("n_t", dc.n_t);
  dc.dt = d.get_number("dt", dc.dt);
  dc.nu = d.get_number("nu", dc.nu);
  if (d.has("velocity")) {
    const json& v = d.raw("velocity");
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      throw ConfigError("data.velocity: expected two numbers");
    }
    dc.velocity = {v[0].get<double>(), v[1].get<double>()};
  }
  dc.re = d.get_number("re", dc.re);
  dc.forcing_n = static_cast<int>(d.get_int("forcing_n", dc.forcing_n));
  dc.substeps = d.get_int("substeps", dc.substeps);
  dc.ic_scale = d.get_number("ic_scale", dc.ic_scale);
  d.finish();

  c.model = ModelConfig::from_json(j.contains("model") ? r.raw("model") : json::object());
  const bool train_seed = j.contains("train") && j.at("train").is_object() && j.at("train").contains("seed");
  c.train = TrainConfig::from_json(j.contains("train") ? r.raw("train") : json::object());
  if (!train_seed) c.train.seed = c.seed;
  c.train.loss = LossConfig::from_json(j.contains("loss") ? r.raw("loss") : json::object());
  r.finish();
  c.validate();
  return c;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path + " is not valid JSON: " + e.what());
  }
  return RunConfig::from_json(j);
}

std::string write_resolved_config(const RunConfig& cfg, const std::string& dir) {
  fs::create_directories(dir);
  const fs::path p = fs::path(dir) / "resolved_config.json";
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw IoError("cannot write " + p.string());
  out << cfg.to_json().dump(2) << '\n';
  if (!out) throw IoError("failed writing " + p.string());
  return p.string();
}

Dataset generate_dataset(const RunConfig& cfg) {
  const DataConfig& d = cfg.data;
  if (cfg.pde == "heat") return gen_heat(d.n_traj, d.nx, d.ny, d.n_t, d.nu, d.dt, cfg.seed);
  if (cfg.pde == "advdiff") return gen_advdiff(d.n_traj, d.nx, d.ny, d.n_t, d.nu, d.velocity, d.dt, cfg.seed);
  if (cfg.pde == "kolmogorov") {
    return gen_kolmogorov(d.n_traj, d.nx, d.ny, d.n_t, d.re, d.forcing_n, d.dt, cfg.seed, d.substeps, d.ic_scale);
  }
  throw ConfigError("pde: unknown equation \"" + cfg.pde + "\"");
}

// ---- budget ------------------------------------------------------------------------

namespace {

std::string grouped(std::int64_t v) {
  std::string s = std::to_string(v < 0 ? -v : v);
  for (int i = static_cast<int>(s.size()) - 3; i > 0; i -= 3) s.insert(static_cast<std::size_t>(i), ",");
  return v < 0 ? "-" + s : s;
}

}  // namespace

std::string budget_report(std::int64_t width, std::int64_t modes, std::int64_t layers, std::int64_t patch, int dim) {
  const ParamBudget b = param_budget(dim, width, modes, layers, patch);
  std::ostringstream os;
  const char* gf = dim == 2 ? "d_c^2 K^2 L" : "d_c^2 K^3 L";
  const char* lf = dim == 2 ? "d_c^2 p (p/2+1) L" : "d_c^2 p^2 (p/2+1) L";
  os << "d_c=" << width << " K=" << modes << " L=" << layers << " p=" << patch << " dim=" << dim << '\n';
  os << "global " << grouped(b.global_formula) << "  (" << gf << ")\n";
  os << "local " << grouped(b.local_formula) << "  (" << lf << ")\n";
  char ratio[64];
  std::snprintf(ratio, sizeof ratio, "%.4f", static_cast<double>(b.local_formula) / static_cast<double>(b.global_formula));
  os << "local/global " << ratio << (b.local_formula < b.global_formula ? "  (local < global)" : "  (local >= global)")
     << '\n';
  return os.str();
}

// ---- commands ------------------------------------------------------------------------

namespace {

struct Frames {
  std::vector<Field> pred;    // one field per timestep, batch = trajectories
  std::vector<Field> target;
  std::vector<Index> timestep;
  Index blowup_step = -1;
};

Index resolve_end(Index end, const Dataset& ds) { return end < 0 ? ds.n_traj() : end; }

Frames rollout_frames(const LogloModel& model, const Dataset& ds, Index tb, Index te, Index steps) {
  if (steps + 1 > ds.n_t()) {
    throw InvalidInput("dataset has " + std::to_string(ds.n_t()) + " frames, rollout of " + std::to_string(steps) +
                       " steps needs " + std::to_string(steps + 1));
  }
  const Field u0 = ds.frames(tb, te, 0, 1).front();
  Rollout r = rollout(model, u0, steps);
  Frames f;
  f.blowup_step = r.blowup_step;
  const auto n = static_cast<Index>(r.frames.size());
  if (n > 0) f.target = ds.frames(tb, te, 1, n);
  f.pred = std::move(r.frames);
  for (Index s = 1; s <= n; ++s) f.timestep.push_back(s);
  return f;
}

Frames dataset_frames(const Dataset& pred, const Dataset& target) {
  if (pred.data.shape() != target.data.shape()) throw ShapeError("prediction and target datasets differ in shape");
  Frames f;
  f.pred = pred.frames(0, pred.n_traj(), 0, pred.n_t());
  f.target = target.frames(0, target.n_traj(), 0, target.n_t());
  for (Index t = 0; t < target.n_t(); ++t) f.timestep.push_back(t);
  return f;
}

// [traj, t, c, x, y] viewed as [traj, t * c, x, y].
Field folded(const Dataset& ds) {
  return Field(ds.data.reshaped({ds.n_traj(), ds.n_t() * ds.n_c(), ds.nx(), ds.ny()}), ds.meta.lx, ds.meta.ly);
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw IoError("cannot write " + p.string());
  out << text;
  if (!out) throw IoError("failed writing " + p.string());
}

std::string spectra_csv(const Frames& f) {
  std::ostringstream os;
  os.precision(17);
  os << "channel,timestep,radius,error,pred,target\n";
  for (std::size_t s = 0; s < f.pred.size(); ++s) {
    Field err(f.pred[s].values(), f.pred[s].lx(), f.pred[s].ly());
    err.array() -= f.target[s].array();
    const RealTensor e = energy_spectrum(err);
    const RealTensor p = energy_spectrum(f.pred[s]);
    const RealTensor t = energy_spectrum(f.target[s]);
    const Index nb = e.shape()[0], nc = e.shape()[1], bins = e.shape()[2];
    for (Index c = 0; c < nc; ++c) {
      for (Index r = 0; r < bins; ++r) {
        double es = 0.0, ps = 0.0, ts = 0.0;
        for (Index b = 0; b < nb; ++b) {
          const Index k = (b * nc + c) * bins + r;
          es += e[k];
          ps += p[k];
          ts += t[k];
        }
        const auto inv = 1.0 / static_cast<double>(nb);
        os << c << ',' << f.timestep[s] << ',' << r << ',' << es * inv << ',' << ps * inv << ',' << ts * inv << '\n';
      }
    }
  }
  return os.str();
}

std::string pearson_csv(const Frames& f) {
  std::ostringstream os;
  os.precision(17);
  os << "timestep,pearson\n";
  const std::vector<double> p = pearson_by_timestep(f.pred, f.target);
  for (std::size_t s = 0; s < p.size(); ++s) os << f.timestep[s] << ',' << p[s] << '\n';
  return os.str();
}

struct EvalInputs {
  std::string checkpoint;
  std::string data;
  std::string pred;
  std::string target;
  Index traj_begin = 0;
  Index traj_end = -1;
  Index steps = 1;
  Index i_low = 4;
  Index i_high = 12;
  std::string out = ".";

  bool dataset_mode() const { return !pred.empty() || !target.empty(); }
  void check() const {
    if (dataset_mode()) {
      if (pred.empty() || target.empty()) throw InvalidInput("--pred and --target must be given together");
      if (!checkpoint.empty() || !data.empty()) {
        throw InvalidInput("use either --checkpoint/--data or --pred/--target");
      }
    } else if (checkpoint.empty() || data.empty()) {
      throw InvalidInput("--checkpoint and --data are required (or --pred and --target)");
    }
    if (steps < 1) throw InvalidInput("--steps must be at least 1");
  }
};

void add_eval_options(CLI::App* cmd, EvalInputs& in, bool with_pairs) {
  cmd->add_option("--checkpoint", in.checkpoint, "checkpoint manifest (.json) or blob (.bin)");
  cmd->add_option("--data", in.data, "dataset directory");
  if (with_pairs) {
    cmd->add_option("--pred", in.pred, "prediction dataset directory (compared with --target)");
    cmd->add_option("--target", in.target, "reference dataset directory");
  }
  cmd->add_option("--traj-begin", in.traj_begin, "first trajectory")->capture_default_str();
  cmd->add_option("--traj-end", in.traj_end, "one past the last trajectory (default: all)");
  cmd->add_option("--steps", in.steps, "rollout horizon (typical: 1, 5, 15, 20)")
      ->capture_default_str();
  cmd->add_option("--i-low", in.i_low, "radial cutoff between low and mid bands")->capture_default_str();
  cmd->add_option("--i-high", in.i_high, "radial cutoff between mid and high bands")->capture_default_str();
  cmd->add_option("--out", in.out, "output directory")->capture_default_str();
}

int cmd_generate(const std::string& config, const std::string& pde, const std::string& out_opt, std::ostream& out) {
  RunConfig cfg = config.empty() ? RunConfig{} : parse_config(config);
  if (!pde.empty()) cfg.pde = pde;
  cfg.validate();
  const std::string dir = out_opt.empty() ? (fs::path(cfg.out_dir) / "data").string() : out_opt;
  const Dataset ds = generate_dataset(cfg);
  write_dataset(ds, dir);
  write_resolved_config(cfg, dir);
  out << "wrote " << cfg.pde << " dataset [" << ds.n_traj() << ", " << ds.n_t() << ", " << ds.n_c() << ", " << ds.nx()
      << ", " << ds.ny() << "] to " << dir << '\n';
  return 0;
}

int cmd_train(const std::string& config, const std::string& out_opt, Index epochs, const std::string& data,
              std::ostream& out) {
  RunConfig cfg = parse_config(config);
  if (!out_opt.empty()) cfg.out_dir = out_opt;
  if (epochs >= 0) cfg.train.epochs = epochs;
  if (!data.empty()) cfg.data.path = data;
  cfg.validate();
  write_resolved_config(cfg, cfg.out_dir);

  Dataset ds;
  if (cfg.data.path.empty()) {
    ds = generate_dataset(cfg);
    write_dataset(ds, (fs::path(cfg.out_dir) / "data").string());
  } else {
    ds = read_dataset(cfg.data.path);
  }
  if (cfg.data.train_traj > ds.n_traj()) {
    throw ConfigError("data.train_traj (" + std::to_string(cfg.data.train_traj) + ") exceeds the " +
                      std::to_string(ds.n_traj()) + " trajectories in the dataset");
  }
  if (cfg.model.in_channels != ds.n_c() || cfg.model.out_channels != ds.n_c()) {
    throw ConfigError("model.in_channels/out_channels must equal the dataset's " + std::to_string(ds.n_c()) +
                      " channels");
  }
  const PairSet pairs = make_pairs(ds, 0, cfg.data.train_traj);
  LogloModel model(cfg.model, cfg.seed);
  const std::vector<EpochStats> stats = train(model, pairs, cfg.train, TrainOptions{cfg.out_dir, {}});
  out << "trained " << cfg.train.epochs << " epochs on " << pairs.size() << " pairs";
  if (!stats.empty()) out << ", final loss " << stats.back().train_loss;
  out << "; checkpoint " << (fs::path(cfg.out_dir) / ("checkpoint_" + std::to_string(cfg.train.epochs) + ".json")).string()
      << '\n';
  return 0;
}

int cmd_evaluate(const EvalInputs& in, std::ostream& out) {
  in.check();
  fs::create_directories(in.out);
  json report;
  std::vector<MetricReport> per_step;
  if (in.dataset_mode()) {
    const Dataset pred = read_dataset(in.pred), target = read_dataset(in.target);
    const Frames f = dataset_frames(pred, target);
    const RadialSpec spec = radial_bin_map(target.nx(), target.ny(), in.i_low, in.i_high);
    MetricReport all = evaluate_metrics(folded(pred), folded(target), spec);
    per_step.push_back(all);
    report = {{"mode", "datasets"}, {"report", all.to_json()}, {"pearson_by_t", pearson_by_timestep(f.pred, f.target)}};
    write_text(fs::path(in.out) / "pearson_by_t.csv", pearson_csv(f));
  } else {
    const LogloModel model = load_checkpoint(in.checkpoint);
    const Dataset ds = read_dataset(in.data);
    const Index te = resolve_end(in.traj_end, ds);
    const RadialSpec spec = radial_bin_map(ds.nx(), ds.ny(), in.i_low, in.i_high);
    const PairSet pairs = make_pairs(ds, in.traj_begin, te);
    const MetricReport one = evaluate_metrics(predict(model, pairs.inputs), pairs.targets, spec);
    const Frames f = rollout_frames(model, ds, in.traj_begin, te, in.steps);
    json steps = json::array();
    for (std::size_t s = 0; s < f.pred.size(); ++s) {
      per_step.push_back(evaluate_metrics(f.pred[s], f.target[s], spec));
      steps.push_back(per_step.back().to_json());
    }
    report = {{"mode", "checkpoint"},
              {"checkpoint", in.checkpoint},
              {"data", in.data},
              {"trajectories", {in.traj_begin, te}},
              {"one_step", one.to_json()},
              {"rollout", {{"steps", in.steps}, {"blowup_step", f.blowup_step}, {"per_step", steps}}}};
    out << "1-step nRMSE " << one.nrmse;
    if (!per_step.empty()) out << ", step-" << per_step.size() << " nRMSE " << per_step.back().nrmse;
    if (f.blowup_step >= 0) out << ", blow-up at step " << f.blowup_step;
    out << '\n';
  }
  write_text(fs::path(in.out) / "metrics.json", report.dump(2) + "\n");
  write_text(fs::path(in.out) / "metrics.csv", metrics_csv(per_step));
  out << "wrote " << (fs::path(in.out) / "metrics.json").string() << '\n';
  return 0;
}

int cmd_rollout(const EvalInputs& in, std::ostream& out) {
  in.check();
  fs::create_directories(in.out);
  const LogloModel model = load_checkpoint(in.checkpoint);
  const Dataset ds = read_dataset(in.data);
  const Index te = resolve_end(in.traj_end, ds);
  const RadialSpec spec = radial_bin_map(ds.nx(), ds.ny(), in.i_low, in.i_high);
  const Frames f = rollout_frames(model, ds, in.traj_begin, te, in.steps);

  // Trajectory file: initial frame followed by the predictions.
  Dataset traj;
  const Index nt = te - in.traj_begin, n = static_cast<Index>(f.pred.size()) + 1;
  const Index frame = ds.n_c() * ds.nx() * ds.ny();
  traj.data = RealTensor(Shape{nt, n, ds.n_c(), ds.nx(), ds.ny()});
  const Field u0 = ds.frames(in.traj_begin, te, 0, 1).front();
  for (Index b = 0; b < nt; ++b) {
    traj.data.array().segment(b * n * frame, frame) = u0.array().segment(b * frame, frame);
    for (Index s = 1; s < n; ++s) {
      traj.data.array().segment((b * n + s) * frame, frame) =
          f.pred[static_cast<std::size_t>(s - 1)].array().segment(b * frame, frame);
    }
  }
  traj.meta = ds.meta;
  traj.meta.pde = ds.meta.pde + "-rollout";
  write_dataset(traj, (fs::path(in.out) / "rollout").string());

  std::vector<MetricReport> per_step;
  for (std::size_t s = 0; s < f.pred.size(); ++s) per_step.push_back(evaluate_metrics(f.pred[s], f.target[s], spec));
  write_text(fs::path(in.out) / "rollout_metrics.csv", metrics_csv(per_step));
  write_text(fs::path(in.out) / "pearson_by_t.csv", pearson_csv(f));
  json steps = json::array();
  for (const MetricReport& r : per_step) steps.push_back(r.to_json());
  const json report{{"mode", "rollout"},
                    {"steps", in.steps},
                    {"blowup_step", f.blowup_step},
                    {"per_step", steps},
                    {"pearson_by_t", pearson_by_timestep(f.pred, f.target)}};
  write_text(fs::path(in.out) / "metrics.json", report.dump(2) + "\n");
  out << "rolled out " << f.pred.size() << " of " << in.steps << " steps for " << nt << " trajectories";
  if (f.blowup_step >= 0) out << "; blow-up at step " << f.blowup_step;
  out << '\n';
  return 0;
}

int cmd_spectra(const EvalInputs& in, std::ostream& out) {
  in.check();
  fs::create_directories(in.out);
  Frames f;
  if (in.dataset_mode()) {
    f = dataset_frames(read_dataset(in.pred), read_dataset(in.target));
  } else {
    const Dataset ds = read_dataset(in.data);
    f = rollout_frames(load_checkpoint(in.checkpoint), ds, in.traj_begin, resolve_end(in.traj_end, ds), in.steps);
  }
  write_text(fs::path(in.out) / "spectra.csv", spectra_csv(f));
  out << "wrote " << (fs::path(in.out) / "spectra.csv").string() << '\n';
  return 0;
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '\r', ' ');
  return s;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"LOGLO-FNO: local-global Fourier neural operator toolkit", "loglo"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "help for every subcommand");

  std::string config, pde, out_dir, data;
  Index epochs = -1;
  CLI::App* gen = app.add_subcommand("generate", "generate a synthetic dataset");
  gen->add_option("--config", config, "run config (JSON)");
  gen->add_option("--pde", pde, "heat, advdiff or kolmogorov (overrides the config)");
  gen->add_option("--out", out_dir, "dataset directory (default <out_dir>/data)");

  CLI::App* tr = app.add_subcommand("train", "train a model; writes checkpoints and train_log.csv");
  tr->add_option("--config", config, "run config (JSON)")->required();
  tr->add_option("--out", out_dir, "output directory (overrides out_dir)");
  tr->add_option("--epochs", epochs, "number of epochs (overrides train.epochs)");
  tr->add_option("--data", data, "existing dataset directory (overrides data.path)");

  EvalInputs ev, ro, sp;
  CLI::App* evc = app.add_subcommand("evaluate", "metric report for a checkpoint or a prediction dataset");
  add_eval_options(evc, ev, true);
  CLI::App* roc = app.add_subcommand("rollout", "autoregressive rollout with per-step metrics");
  add_eval_options(roc, ro, false);
  CLI::App* spc = app.add_subcommand("spectra", "radially binned error spectra as CSV");
  add_eval_options(spc, sp, true);

  std::int64_t dc = 65, k = 40, l = 4, p = 16;
  int dim = 2;
  CLI::App* bud = app.add_subcommand("budget", "spectral weight budgets, global vs local");
  bud->add_option("--dc", dc, "channel width d_c")->capture_default_str();
  bud->add_option("--k", k, "retained modes K per axis")->capture_default_str();
  bud->add_option("--l", l, "layers L")->capture_default_str();
  bud->add_option("--p", p, "patch size p")->capture_default_str();
  bud->add_option("--dim", dim, "2 or 3")->capture_default_str()->check(CLI::IsMember({2, 3}));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: UsageError: " << one_line(e.what()) << '\n';
    return 2;
  }

  try {
    tune_allocator();
    if (gen->parsed()) return cmd_generate(config, pde, out_dir, out);
    if (tr->parsed()) return cmd_train(config, out_dir, epochs, data, out);
    if (evc->parsed()) return cmd_evaluate(ev, out);
    if (roc->parsed()) return cmd_rollout(ro, out);
    if (spc->parsed()) return cmd_spectra(sp, out);
    if (bud->parsed()) {
      if (dc < 1 || k < 1 || l < 1 || p < 1) throw InvalidInput("budget values must be positive");
      out << budget_report(dc, k, l, p, dim);
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << e.kind() << ": " << one_line(e.what()) << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: InternalError: " << one_line(e.what()) << '\n';
    return 1;
  }
  return 1;
}

int run_command(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_command(args, std::cout, std::cerr);
}

}  // namespace loglo
