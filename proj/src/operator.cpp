#include "loglo/operator.hpp"

#include <cmath>
#include <random>

#include "json_util.hpp"

namespace loglo {

using nlohmann::json;

// ---- config -------------------------------------------------------------------

void ModelConfig::validate() const {
  auto positive = [](Index v, const char* name) {
    if (v < 1) throw ConfigError(std::string("model.") + name + " must be positive");
  };
  positive(in_channels, "in_channels");
  positive(out_channels, "out_channels");
  positive(width, "width");
  positive(modes_x, "modes");
  positive(modes_y, "modes");
  positive(patch, "patch");
  positive(hfp_kernel, "hfp_kernel");
  positive(hfp_stride, "hfp_stride");
  if (n_layers < 0) throw ConfigError("model.n_layers must be non-negative");
}

void ModelConfig::check_grid(Index nx, Index ny) const {
  if (modes_x > nx || ky_bins() > ny / 2 + 1) {
    throw ShapeError("modes (" + std::to_string(modes_x) + ", " + std::to_string(modes_y) +
                     ") exceed grid " + std::to_string(nx) + "x" + std::to_string(ny));
  }
  if (use_local && (nx % patch != 0 || ny % patch != 0)) {
    throw ShapeError("patch size " + std::to_string(patch) + " does not divide grid " +
                     std::to_string(nx) + "x" + std::to_string(ny));
  }
  if (use_hfp) {
    pooled_size(nx, hfp_kernel, hfp_stride);
    pooled_size(ny, hfp_kernel, hfp_stride);
  }
}

json ModelConfig::to_json() const {
  return json{{"in_channels", in_channels},
              {"out_channels", out_channels},
              {"width", width},
              {"n_layers", n_layers},
              {"modes", {modes_x, modes_y}},
              {"patch", patch},
              {"use_local", use_local},
              {"use_hfp", use_hfp},
              {"append_coord_grid", append_coord_grid},
              {"hfp_kernel", hfp_kernel},
              {"hfp_stride", hfp_stride},
              {"hfp_interp", std::string(to_string(hfp_interp))}};
}

ModelConfig ModelConfig::from_json(const json& j) {
  detail::ObjectReader r(j, "model");
  ModelConfig c;
  c.in_channels = r.get_int("in_channels", c.in_channels);
  c.out_channels = r.get_int("out_channels", c.out_channels);
  c.width = r.get_int("width", c.width);
  c.n_layers = r.get_int("n_layers", c.n_layers);
  if (r.has("modes")) {
    const json& m = r.raw("modes");
    if (m.is_number_integer()) {
      c.modes_x = c.modes_y = m.get<Index>();
    } else if (m.is_array() && m.size() == 2 && m[0].is_number_integer() && m[1].is_number_integer()) {
      c.modes_x = m[0].get<Index>();
      c.modes_y = m[1].get<Index>();
    } else {
      throw ConfigError("model.modes: expected an integer or a pair of integers");
    }
  }
  c.patch = r.get_int("patch", c.patch);
  c.use_local = r.get_bool("use_local", c.use_local);
  c.use_hfp = r.get_bool("use_hfp", c.use_hfp);
  c.append_coord_grid = r.get_bool("append_coord_grid", c.append_coord_grid);
  c.hfp_kernel = r.get_int("hfp_kernel", c.hfp_kernel);
  c.hfp_stride = r.get_int("hfp_stride", c.hfp_stride);
  const std::string interp = r.get_string("hfp_interp", std::string(to_string(c.hfp_interp)));
  c.hfp_interp = parse_interp_mode(interp);
  r.finish();
  c.validate();
  return c;
}

// ---- parameters -----------------------------------------------------------------

namespace {

RealTensor uniform(Shape shape, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-bound, bound);
  RealTensor t(std::move(shape));
  for (Index i = 0; i < t.size(); ++i) t[i] = u(rng);
  return t;
}

std::string layer_prefix(Index l) { return "layer" + std::to_string(l) + "."; }

}  // namespace

LogloModel::LogloModel(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  std::mt19937_64 rng(seed);
  const Index d = config_.width;
  const Index cin = config_.lift_channels();

  auto linear = [&](const std::string& name, Index out, Index in) {
    const double s = 1.0 / std::sqrt(static_cast<double>(in));
    add(name + ".w", uniform({out, in}, s, rng));
    add(name + ".b", uniform({out}, s, rng));
  };
  auto mlp = [&](const std::string& name) {
    linear(name + ".fc1", d, d);
    linear(name + ".fc2", d, d);
  };
  auto gate = [&](const std::string& name) {
    add(name + ".scale", RealTensor::constant({d}, 1.0));
    add(name + ".bias", RealTensor({d}));
  };
  const double spectral_scale = 1.0 / static_cast<double>(d * d);

  linear("lift", d, cin);
  for (Index l = 0; l < config_.n_layers; ++l) {
    const std::string pre = layer_prefix(l);
    add(pre + "global.weights",
        uniform({config_.modes_x, config_.ky_bins(), d, d, 2}, spectral_scale, rng));
    linear(pre + "global.conv", d, d);
    gate(pre + "global.gate");
    mlp(pre + "global.mlp");
    if (config_.use_local) {
      add(pre + "local.weights",
          uniform({config_.patch, config_.patch / 2 + 1, d, d, 2}, spectral_scale, rng));
      linear(pre + "local.conv", d, d);
      gate(pre + "local.gate");
      mlp(pre + "local.mlp");
    }
    if (config_.use_hfp) mlp(pre + "hfp.mlp");
  }
  linear("proj.fc1", d, d);
  linear("proj.fc2", config_.out_channels, d);
}

void LogloModel::add(std::string name, RealTensor value) {
  params_.push_back(NamedParam{std::move(name), std::move(value)});
}

bool LogloModel::has(std::string_view name) const {
  for (const auto& p : params_)
    if (p.name == name) return true;
  return false;
}

Index LogloModel::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (params_[i].name == name) return static_cast<Index>(i);
  throw InvalidInput("no parameter named '" + std::string(name) + "'");
}

const RealTensor& LogloModel::param(std::string_view name) const {
  return params_[static_cast<std::size_t>(index_of(name))].value;
}

RealTensor& LogloModel::param(std::string_view name) {
  return params_[static_cast<std::size_t>(index_of(name))].value;
}

std::vector<RealTensor> LogloModel::values() const {
  std::vector<RealTensor> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.value);
  return out;
}

void LogloModel::set_values(std::span<const RealTensor> values) {
  if (values.size() != params_.size()) throw ShapeError("parameter count mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) {
    require_same_shape(params_[i].value.shape(), values[i].shape(), params_[i].name.c_str());
    params_[i].value = values[i];
  }
}

ModelVars ModelVars::bind(const LogloModel& model, ad::Tape& tape, bool trainable) {
  std::vector<ad::Var> vars;
  vars.reserve(model.params().size());
  for (const auto& p : model.params()) {
    vars.push_back(trainable ? tape.variable(p.value) : tape.constant(p.value));
  }
  return ModelVars(model, std::move(vars));
}

const ad::Var& ModelVars::operator[](std::string_view name) const {
  return vars_[static_cast<std::size_t>(model_->index_of(name))];
}

// ---- graph building blocks ---------------------------------------------------------

ad::Var lift(const ad::Var& x, const ModelVars& p) {
  const Index expected = p.model().config().lift_channels();
  if (x.shape().size() < 2 || x.shape()[1] != expected) {
    throw ShapeError("lift expects " + std::to_string(expected) + " channels, got input " +
                     shape_string(x.shape()));
  }
  return ad::channel_linear(x, p["lift.w"], p["lift.b"]);
}

ad::Var spectral_conv(const ad::Var& z, const ad::Var& weights) {
  const Shape& zs = z.shape();
  const Shape& ws = weights.shape();
  if (zs.size() < 4 || ws.size() != 5 || ws[4] != 2) {
    throw ShapeError("spectral_conv: input " + shape_string(zs) + ", weights " + shape_string(ws));
  }
  const Index nx = zs[zs.size() - 2], ny = zs.back();
  if (ws[0] > nx || ws[1] > ny / 2 + 1) {
    throw ShapeError("spectral_conv: modes (" + std::to_string(ws[0]) + ", " +
                     std::to_string(ws[1]) + " bins) exceed grid " + std::to_string(nx) + "x" +
                     std::to_string(ny));
  }
  const ad::ModeWindow window{ws[0], ws[1]};
  const ad::Var zhat = ad::rdft2_modes(z, window, FftNorm::ortho);
  const ad::Var mixed = ad::spectral_contract(zhat, ad::as_complex(weights), window);
  return ad::irdft2_modes(mixed, nx, ny, FftNorm::ortho);
}

ad::Var channel_mlp(const ad::Var& z, const ModelVars& p, const std::string& prefix) {
  const ad::Var h = ad::gelu(ad::channel_linear(z, p[prefix + ".fc1.w"], p[prefix + ".fc1.b"]));
  return ad::channel_linear(h, p[prefix + ".fc2.w"], p[prefix + ".fc2.b"]);
}

ad::Var hfp_extract(const ad::Var& x, Index kernel, Index stride, InterpMode mode) {
  const Index nx = x.shape()[x.shape().size() - 2], ny = x.shape().back();
  return ad::sub(x, ad::interpolate2(ad::avg_pool2(x, kernel, stride), nx, ny, mode));
}

namespace {

// Y = GELU(K(z) + Conv(z)); returns ChannelMLP(Y) + SoftGate(z).
ad::Var branch(const ad::Var& z, const ModelVars& p, const std::string& pre) {
  const ad::Var k = spectral_conv(z, p[pre + ".weights"]);
  const ad::Var c = ad::channel_linear(z, p[pre + ".conv.w"], p[pre + ".conv.b"]);
  const ad::Var y = ad::gelu(ad::add(k, c));
  return ad::add(channel_mlp(y, p, pre + ".mlp"), ad::soft_gate(z, p[pre + ".gate.scale"], p[pre + ".gate.bias"]));
}

ad::Var project(const ad::Var& z, const ModelVars& p) {
  const ad::Var h = ad::gelu(ad::channel_linear(z, p["proj.fc1.w"], p["proj.fc1.b"]));
  return ad::channel_linear(h, p["proj.fc2.w"], p["proj.fc2.b"]);
}

RealTensor coord_grid(Index batch, Index nx, Index ny) {
  RealTensor g(Shape{batch, 2, nx, ny});
  for (Index b = 0; b < batch; ++b)
    for (Index i = 0; i < nx; ++i)
      for (Index j = 0; j < ny; ++j) {
        g[((b * 2 + 0) * nx + i) * ny + j] = static_cast<double>(i) / static_cast<double>(nx);
        g[((b * 2 + 1) * nx + i) * ny + j] = static_cast<double>(j) / static_cast<double>(ny);
      }
  return g;
}

// Concatenates along the channel axis of [b, c, nx, ny] tensors.
ad::Var concat_channels(const ad::Var& a, const ad::Var& b) {
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  const Index batch = as[0], ca = as[1], cb = bs[1], inner = as[2] * as[3];
  RealTensor out(Shape{batch, ca + cb, as[2], as[3]});
  for (Index n = 0; n < batch; ++n) {
    out.array().segment(n * (ca + cb) * inner, ca * inner) = a.real().array().segment(n * ca * inner, ca * inner);
    out.array().segment((n * (ca + cb) + ca) * inner, cb * inner) =
        b.real().array().segment(n * cb * inner, cb * inner);
  }
  return a.tape().record(std::move(out), "concat_channels", {a, b},
                         [a, b, batch, ca, cb, inner](ad::Tape& t, const ad::Value& gv) {
                           const RealTensor& g = std::get<RealTensor>(gv);
                           RealTensor ga(a.shape()), gb(b.shape());
                           for (Index n = 0; n < batch; ++n) {
                             ga.array().segment(n * ca * inner, ca * inner) =
                                 g.array().segment(n * (ca + cb) * inner, ca * inner);
                             gb.array().segment(n * cb * inner, cb * inner) =
                                 g.array().segment((n * (ca + cb) + ca) * inner, cb * inner);
                           }
                           t.accumulate(a, std::move(ga));
                           t.accumulate(b, std::move(gb));
                         });
}

ad::Var prepare_input(const ad::Var& x, const ModelConfig& c) {
  if (x.shape().size() != 4 || x.shape()[1] != c.in_channels) {
    throw ShapeError("model expects [b, " + std::to_string(c.in_channels) + ", nx, ny], got " +
                     shape_string(x.shape()));
  }
  c.check_grid(x.shape()[2], x.shape()[3]);
  if (!c.append_coord_grid) return x;
  return concat_channels(x, x.tape().constant(coord_grid(x.shape()[0], x.shape()[2], x.shape()[3])));
}

}  // namespace

LayerState loglo_layer(const LayerState& in, const ModelVars& p, Index layer, bool is_last) {
  const ModelConfig& c = p.model().config();
  const std::string pre = layer_prefix(layer);
  ad::Var fused = branch(in.z, p, pre + "global");
  if (c.use_local) {
    if (!in.patches.valid()) throw ShapeError("loglo_layer: missing patch stream");
    const Index gx = in.z.shape()[2] / c.patch, gy = in.z.shape()[3] / c.patch;
    if (in.patches.shape() != Shape{in.z.shape()[0], c.width, gx * gy, c.patch, c.patch}) {
      throw ShapeError("loglo_layer: patch stream " + shape_string(in.patches.shape()) +
                       " inconsistent with grid " + shape_string(in.z.shape()));
    }
    fused = ad::add(fused, ad::reassemble_patches(branch(in.patches, p, pre + "local"), gx, gy));
  }
  ad::Var h;
  if (c.use_hfp) {
    if (!in.hf.valid()) throw ShapeError("loglo_layer: missing high-frequency stream");
    require_same_shape(in.hf.shape(), in.z.shape(), "loglo_layer");
    h = channel_mlp(in.hf, p, pre + "hfp.mlp");
    fused = ad::add(fused, h);
  }
  LayerState out;
  out.z = is_last ? fused : ad::gelu(fused);
  if (c.use_local) out.patches = ad::extract_patches(out.z, c.patch);
  out.hf = h;
  return out;
}

ad::Var model_forward(const ad::Var& x, const ModelVars& p, const RealTensor* noise) {
  const ModelConfig& c = p.model().config();
  const ad::Var xin = prepare_input(x, c);
  ad::Var xn = xin;
  if (noise) {
    require_same_shape(noise->shape(), x.shape(), "model_forward noise");
    xn = prepare_input(ad::add(x, x.tape().constant(*noise)), c);
  }

  LayerState s;
  s.z = lift(xn, p);
  // Lifting is pointwise, so patching the lifted field equals lifting the patches.
  if (c.use_local) s.patches = ad::extract_patches(s.z, c.patch);
  if (c.use_hfp) s.hf = lift(hfp_extract(xin, c.hfp_kernel, c.hfp_stride, c.hfp_interp), p);
  for (Index l = 0; l < c.n_layers; ++l) s = loglo_layer(s, p, l, l + 1 == c.n_layers);
  return project(s.z, p);
}

ad::Var fno_forward(const ad::Var& x, const ModelVars& p) {
  const ModelConfig& c = p.model().config();
  ad::Var z = lift(prepare_input(x, c), p);
  for (Index l = 0; l < c.n_layers; ++l) {
    const std::string pre = layer_prefix(l) + "global";
    const ad::Var k = spectral_conv(z, p[pre + ".weights"]);
    const ad::Var w = ad::channel_linear(z, p[pre + ".conv.w"], p[pre + ".conv.b"]);
    const ad::Var y = ad::gelu(ad::add(k, w));
    const ad::Var h = ad::gelu(ad::channel_linear(y, p[pre + ".mlp.fc1.w"], p[pre + ".mlp.fc1.b"]));
    const ad::Var m = ad::channel_linear(h, p[pre + ".mlp.fc2.w"], p[pre + ".mlp.fc2.b"]);
    const ad::Var out = ad::add(m, ad::soft_gate(z, p[pre + ".gate.scale"], p[pre + ".gate.bias"]));
    z = l + 1 == c.n_layers ? out : ad::gelu(out);
  }
  return project(z, p);
}

// ---- field-level wrappers --------------------------------------------------------------

Field lift(const Field& f, const LogloModel& m) {
  ad::Tape t;
  ModelVars p = ModelVars::bind(m, t, false);
  return Field(lift(t.constant(f.values()), p).real(), f.lx(), f.ly());
}

PatchSet lift(const PatchSet& ps, const LogloModel& m) {
  ad::Tape t;
  ModelVars p = ModelVars::bind(m, t, false);
  PatchSet out = ps;
  out.values = lift(t.constant(ps.values), p).real();
  return out;
}

Field spectral_conv(const Field& z, const RealTensor& weights) {
  ad::Tape t;
  return Field(spectral_conv(t.constant(z.values()), t.constant(weights)).real(), z.lx(), z.ly());
}

PatchSet local_spectral_conv(const PatchSet& ps, const RealTensor& weights) {
  if (weights.rank() != 5 || weights.dim(0) != ps.patch || weights.dim(1) != ps.patch / 2 + 1) {
    throw ShapeError("local weights " + shape_string(weights.shape()) +
                     " must retain all modes of " + std::to_string(ps.patch) + "x" +
                     std::to_string(ps.patch) + " patches");
  }
  ad::Tape t;
  PatchSet out = ps;
  out.values = spectral_conv(t.constant(ps.values), t.constant(weights)).real();
  return out;
}

Field soft_gating(const Field& z, const RealTensor& scale, const RealTensor& bias) {
  ad::Tape t;
  return Field(ad::soft_gate(t.constant(z.values()), t.constant(scale), t.constant(bias)).real(), z.lx(),
               z.ly());
}

Field pointwise_conv(const Field& z, const RealTensor& w, const RealTensor& bias) {
  ad::Tape t;
  return Field(ad::channel_linear(t.constant(z.values()), t.constant(w), t.constant(bias)).real(), z.lx(),
               z.ly());
}

Field channel_mlp(const Field& z, const RealTensor& w1, const RealTensor& b1, const RealTensor& w2,
                  const RealTensor& b2) {
  ad::Tape t;
  const ad::Var h = ad::gelu(ad::channel_linear(t.constant(z.values()), t.constant(w1), t.constant(b1)));
  return Field(ad::channel_linear(h, t.constant(w2), t.constant(b2)).real(), z.lx(), z.ly());
}

Field hfp_extract(const Field& x, Index kernel, Index stride, InterpMode mode) {
  ad::Tape t;
  return Field(hfp_extract(t.constant(x.values()), kernel, stride, mode).real(), x.lx(), x.ly());
}

Field model_forward(const Field& x, const LogloModel& m) {
  x.validate("model_forward");
  ad::Tape t;
  ModelVars p = ModelVars::bind(m, t, false);
  return Field(model_forward(t.constant(x.values()), p).real(), x.lx(), x.ly());
}

Field fno_forward(const Field& x, const LogloModel& m) {
  x.validate("fno_forward");
  ad::Tape t;
  ModelVars p = ModelVars::bind(m, t, false);
  return Field(fno_forward(t.constant(x.values()), p).real(), x.lx(), x.ly());
}

RealTensor pack_complex_weights(const ComplexTensor& w) {
  Shape s = w.shape();
  s.push_back(2);
  RealTensor out(s);
  for (Index i = 0; i < w.size(); ++i) {
    out[2 * i] = w[i].real();
    out[2 * i + 1] = w[i].imag();
  }
  return out;
}

// ---- budgets -------------------------------------------------------------------------------

ParamBudget param_budget(int dim, std::int64_t width, std::int64_t modes, std::int64_t layers,
                         std::int64_t patch) {
  if (dim != 2 && dim != 3) throw ConfigError("param_budget: dim must be 2 or 3");
  if (width < 1 || modes < 1 || layers < 1 || patch < 1) {
    throw ConfigError("param_budget: arguments must be positive");
  }
  ParamBudget b;
  const std::int64_t d2 = width * width;
  b.global_formula = d2 * modes * modes * (dim == 3 ? modes : 1) * layers;
  b.local_formula = d2 * patch * (dim == 3 ? patch : 1) * (patch / 2 + 1) * layers;
  return b;
}

ParamCount count_params(const LogloModel& m) {
  ParamCount c;
  for (const char* k : {"lift", "global", "local", "hfp", "projection"}) c.by_component[k] = 0;
  for (const auto& p : m.params()) {
    const std::int64_t n = p.value.size();
    c.total += n;
    std::string comp;
    if (p.name.rfind("lift", 0) == 0) {
      comp = "lift";
    } else if (p.name.rfind("proj", 0) == 0) {
      comp = "projection";
    } else if (p.name.find(".global.") != std::string::npos) {
      comp = "global";
    } else if (p.name.find(".local.") != std::string::npos) {
      comp = "local";
    } else {
      comp = "hfp";
    }
    c.by_component[comp] += n;
    if (p.name.ends_with("global.weights")) c.global_spectral += n;
    if (p.name.ends_with("local.weights")) c.local_spectral += n;
  }
  return c;
}

FftFlops fft_flops(int dim, std::int64_t batch, std::int64_t c_in, std::int64_t c_out,
                   std::int64_t nx, std::int64_t ny, std::int64_t nz, std::int64_t patch) {
  if (dim != 2 && dim != 3) throw ConfigError("fft_flops: dim must be 2 or 3");
  if (batch < 1 || c_in < 1 || c_out < 1 || nx < 1 || ny < 1 || patch < 1 || (dim == 3 && nz < 1)) {
    throw ConfigError("fft_flops: sizes must be positive");
  }
  const double n = static_cast<double>(nx) * static_cast<double>(ny) * (dim == 3 ? static_cast<double>(nz) : 1.0);
  const double pn = std::pow(static_cast<double>(patch), dim);
  const double b = static_cast<double>(batch);
  FftFlops f;
  f.global_fwd = 5.0 * b * static_cast<double>(c_in) * n * std::log2(n);
  f.global_inv = 5.0 * b * static_cast<double>(c_out) * n * std::log2(n);
  f.local_fwd = 5.0 * b * static_cast<double>(c_in) * n * std::log2(pn);
  f.local_inv = 5.0 * b * static_cast<double>(c_out) * n * std::log2(pn);
  return f;
}

}  // namespace loglo
