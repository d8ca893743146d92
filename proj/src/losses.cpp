#include "loglo/losses.hpp"

#include <cmath>
#include <random>

#include "json_util.hpp"
#include "loglo/fft.hpp"

namespace loglo {

using nlohmann::json;

namespace {

constexpr const char* kBandNames[3] = {"low", "mid", "high"};

}  // namespace

void LossConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("loss.lambda must lie in [0, 1]");
  if (lambda > 0.0 && !(bands_penalized[0] || bands_penalized[1] || bands_penalized[2])) {
    throw ConfigError("loss.bands must not be empty when lambda > 0");
  }
  if (!(noise_alpha >= 0.0)) throw ConfigError("loss.noise_alpha must be non-negative");
  if (!(sphere_alpha >= 0.0)) throw ConfigError("loss.sphere_alpha must be non-negative");
  if (!(sphere_p > 0.0)) throw ConfigError("loss.sphere_p must be positive");
  if (i_low < 1 || i_high <= i_low) throw ConfigError("loss: need 1 <= i_low < i_high");
}

json LossConfig::to_json() const {
  json bands = json::array();
  for (int k = 0; k < 3; ++k)
    if (bands_penalized[static_cast<std::size_t>(k)]) bands.push_back(kBandNames[k]);
  return json{{"lambda", lambda},
              {"bands", bands},
              {"reduction", reduction == Reduction::mean ? "mean" : "sum"},
              {"noise_alpha", noise_alpha},
              {"sphere_alpha", sphere_alpha},
              {"sphere_p", sphere_p},
              {"i_low", i_low},
              {"i_high", i_high}};
}

LossConfig LossConfig::from_json(const json& j) {
  detail::ObjectReader r(j, "loss");
  LossConfig c;
  c.lambda = r.get_number("lambda", c.lambda);
  if (r.has("bands")) {
    const json& b = r.raw("bands");
    if (!b.is_array()) throw ConfigError("loss.bands: expected an array of band names");
    c.bands_penalized = {false, false, false};
    for (const json& name : b) {
      bool found = false;
      for (int k = 0; k < 3; ++k) {
        if (name.is_string() && name.get<std::string>() == kBandNames[k]) {
          c.bands_penalized[static_cast<std::size_t>(k)] = true;
          found = true;
        }
      }
      if (!found) throw ConfigError("loss.bands: unknown band " + name.dump());
    }
  }
  const std::string red = r.get_string("reduction", "mean");
  if (red == "mean") {
    c.reduction = Reduction::mean;
  } else if (red == "sum") {
    c.reduction = Reduction::sum;
  } else {
    throw ConfigError("loss.reduction: expected \"mean\" or \"sum\"");
  }
  c.noise_alpha = r.get_number("noise_alpha", c.noise_alpha);
  c.sphere_alpha = r.get_number("sphere_alpha", c.sphere_alpha);
  c.sphere_p = r.get_number("sphere_p", c.sphere_p);
  c.i_low = r.get_int("i_low", c.i_low);
  c.i_high = r.get_int("i_high", c.i_high);
  r.finish();
  c.validate();
  return c;
}

ad::Var mse(const ad::Var& pred, const ad::Var& target) {
  return ad::mean(ad::square(ad::sub(pred, target)));
}

FreqLossVar radial_freq_loss(const ad::Var& pred, const ad::Var& target, const RadialSpec& spec,
                             const LossConfig& cfg, double lx, double ly) {
  require_same_shape(pred.shape(), target.shape(), "radial_freq_loss");
  const Shape& s = pred.shape();
  if (s.size() != 4 || s[2] != spec.nx || s[3] != spec.ny) {
    throw ShapeError("radial_freq_loss: input " + shape_string(s) + " does not match radial spec " +
                     std::to_string(spec.nx) + "x" + std::to_string(spec.ny));
  }
  const Index channels = s[1];
  const ad::Var diff = ad::sub(pred, target);
  const ad::Var energy = ad::abs2(ad::rfft2(diff, FftNorm::backward));
  const ad::Var binned = ad::mean_axis0(ad::bin_quadrant(energy, spec));  // [c, M+1]
  const double cell = (lx / static_cast<double>(spec.nx)) * (ly / static_cast<double>(spec.ny));
  const ad::Var radial = ad::scale(ad::sqrt(binned), cell);
  const ad::Var bands = ad::band_means(radial, spec);  // [c, 3]

  RealTensor w(bands.shape());
  const double per = cfg.reduction == Reduction::mean ? 1.0 / static_cast<double>(channels) : 1.0;
  for (Index c = 0; c < channels; ++c)
    for (Index k = 0; k < 3; ++k)
      if (cfg.bands_penalized[static_cast<std::size_t>(k)]) w[c * 3 + k] = per;

  FreqLossVar out;
  out.loss = ad::dot_const(bands, w);
  out.bands = band_classify(radial.real(), spec);
  return out;
}

FreqLossValue radial_freq_loss(const Field& pred, const Field& target, const RadialSpec& spec,
                               const LossConfig& cfg) {
  require_same_shape(pred, target, "radial_freq_loss");
  ad::Tape t;
  FreqLossVar v = radial_freq_loss(t.constant(pred.values()), t.constant(target.values()), spec, cfg,
                                   target.lx(), target.ly());
  return FreqLossValue{v.loss.item(), std::move(v.bands)};
}

RealTensor sphere_weights(Index patch, double alpha, double p) {
  auto freq = [patch](Index k) {
    // fftfreq(patch, d=1)
    const Index signed_k = k < (patch + 1) / 2 ? k : k - patch;
    return static_cast<double>(signed_k) / static_cast<double>(patch);
  };
  RealTensor fm(Shape{patch, patch});
  for (Index i = 0; i < patch; ++i)
    for (Index j = 0; j < patch; ++j) fm[i * patch + j] = std::hypot(freq(i), freq(j));
  const double top = fm.array().maxCoeff() + 1e-8;
  RealTensor w(fm.shape());
  for (Index i = 0; i < fm.size(); ++i) w[i] = 1.0 + alpha * std::pow(fm[i] / top, p);
  return w;
}

ad::Var sphere_loss(const ad::Var& pred, const ad::Var& target, Index patch, const LossConfig& cfg) {
  require_same_shape(pred.shape(), target.shape(), "sphere_loss");
  const ad::Var patches = ad::extract_patches(ad::sub(pred, target), patch);
  const ad::Var energy = ad::abs2(ad::rfft2(patches, FftNorm::ortho));  // [b, c, m, p, p/2+1]
  const Shape& es = energy.shape();
  const Index batch = es[0], per_sample = es[1] * es[2];
  const Index nk = patch / 2 + 1;

  // Fold the two-sided weight grid onto the half spectrum.
  const RealTensor full = sphere_weights(patch, cfg.sphere_alpha, cfg.sphere_p);
  RealTensor half(Shape{patch, nk});
  for (Index i = 0; i < patch; ++i)
    for (Index k = 0; k < nk; ++k) half[i * nk + k] = half_spectrum_weight(k, patch) * full[i * patch + k];

  double norm = 1.0 / static_cast<double>(per_sample);
  if (cfg.reduction == Reduction::mean) norm /= static_cast<double>(batch);
  RealTensor w(es);
  const Index block = patch * nk;
  for (Index s = 0; s < w.size() / block; ++s) w.array().segment(s * block, block) = half.array() * norm;
  return ad::dot_const(energy, w);
}

double sphere_loss(const Field& pred, const Field& target, Index patch, const LossConfig& cfg) {
  require_same_shape(pred, target, "sphere_loss");
  ad::Tape t;
  return sphere_loss(t.constant(pred.values()), t.constant(target.values()), patch, cfg).item();
}

CombinedLoss combined_loss(const ad::Var& pred, const ad::Var& target, const LossConfig& cfg,
                           const RadialSpec& spec, double lx, double ly) {
  CombinedLoss out;
  out.mse = mse(pred, target);
  if (cfg.lambda == 0.0) {
    out.total = out.mse;
    return out;
  }
  out.freq = radial_freq_loss(pred, target, spec, cfg, lx, ly).loss;
  out.total = ad::add(out.mse, ad::scale(out.freq, cfg.lambda));
  return out;
}

double combined_loss(const Field& pred, const Field& target, const LossConfig& cfg,
                     const RadialSpec& spec) {
  require_same_shape(pred, target, "combined_loss");
  ad::Tape t;
  return combined_loss(t.constant(pred.values()), t.constant(target.values()), cfg, spec, target.lx(),
                       target.ly())
      .total.item();
}

Field adaptive_noise(const Field& x_hf, double alpha, std::uint64_t seed) {
  if (!(alpha >= 0.0)) throw InvalidInput("adaptive_noise: alpha must be non-negative");
  constexpr double eps = 1e-8;
  Field out(x_hf.values(), x_hf.lx(), x_hf.ly());
  const Index per = x_hf.values().size() / x_hf.batch();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index b = 0; b < x_hf.batch(); ++b) {
    const auto seg = x_hf.array().segment(b * per, per);
    const double mu = seg.mean();
    const double sigma = std::sqrt((seg - mu).square().mean()) + eps;
    auto o = out.array().segment(b * per, per);
    if (alpha == 0.0) {
      o.setConstant(mu);
      continue;
    }
    for (Index i = 0; i < per; ++i) o[i] = mu + alpha * sigma * normal(rng);
  }
  return out;
}

}  // namespace loglo
