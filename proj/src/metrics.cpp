#include "loglo/metrics.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "loglo/losses.hpp"

namespace loglo {

namespace {

Index slice_size(const Field& f) { return f.nx() * f.ny(); }

void check_pair(const Field& pred, const Field& target, const char* where) {
  require_same_shape(pred, target, where);
  pred.validate(where);
  target.validate(where);
}

}  // namespace

double rmse(const Field& pred, const Field& target) {
  check_pair(pred, target, "rmse");
  const Index n = slice_size(pred), slices = pred.batch() * pred.channels();
  double acc = 0.0;
  for (Index s = 0; s < slices; ++s) {
    const auto e = pred.array().segment(s * n, n) - target.array().segment(s * n, n);
    acc += std::sqrt(e.square().sum() / static_cast<double>(n));
  }
  return acc / static_cast<double>(slices);
}

double nrmse(const Field& pred, const Field& target) {
  check_pair(pred, target, "nrmse");
  const Index n = slice_size(pred), slices = pred.batch() * pred.channels();
  double acc = 0.0;
  for (Index s = 0; s < slices; ++s) {
    const auto y = target.array().segment(s * n, n);
    const double norm = std::sqrt(y.square().sum() / static_cast<double>(n));
    if (norm == 0.0) throw DegenerateTarget("nrmse: target slice " + std::to_string(s) + " has zero norm");
    const auto e = pred.array().segment(s * n, n) - y;
    acc += std::sqrt(e.square().sum() / static_cast<double>(n)) / norm;
  }
  return acc / static_cast<double>(slices);
}

double max_error(const Field& pred, const Field& target) {
  check_pair(pred, target, "max_error");
  const Index n = slice_size(pred);
  double acc = 0.0;
  for (Index c = 0; c < pred.channels(); ++c) {
    double m = 0.0;
    for (Index b = 0; b < pred.batch(); ++b) {
      const Index off = pred.offset(b, c, 0, 0);
      m = std::max(m, (pred.array().segment(off, n) - target.array().segment(off, n)).abs().maxCoeff());
    }
    acc += m;
  }
  return acc / static_cast<double>(pred.channels());
}

double brmse(const Field& pred, const Field& target) {
  check_pair(pred, target, "brmse");
  const Index nx = pred.nx(), ny = pred.ny(), slices = pred.batch() * pred.channels();
  double acc = 0.0;
  for (Index s = 0; s < slices; ++s) {
    const Index b = s / pred.channels(), c = s % pred.channels();
    auto d2 = [&](Index i, Index j) {
      const double e = pred(b, c, i, j) - target(b, c, i, j);
      return e * e;
    };
    double sse = 0.0;
    for (Index j = 0; j < ny; ++j) sse += d2(0, j) + d2(nx - 1, j);
    for (Index i = 0; i < nx; ++i) sse += d2(i, 0) + d2(i, ny - 1);
    acc += std::sqrt(sse / static_cast<double>(2 * nx + 2 * ny));
  }
  return acc / static_cast<double>(slices);
}

double crmse(const Field& pred, const Field& target) {
  check_pair(pred, target, "crmse");
  const Index n = slice_size(pred);
  double acc = 0.0;
  for (Index c = 0; c < pred.channels(); ++c) {
    double ms = 0.0;
    for (Index b = 0; b < pred.batch(); ++b) {
      const Index off = pred.offset(b, c, 0, 0);
      const double ds = (pred.array().segment(off, n) - target.array().segment(off, n)).sum();
      ms += ds * ds;
    }
    acc += std::sqrt(ms / static_cast<double>(pred.batch())) / static_cast<double>(n);
  }
  return acc / static_cast<double>(pred.channels());
}

double vrmse(const Field& pred, const Field& target) {
  check_pair(pred, target, "vrmse");
  constexpr double eps = 1e-8;
  const Index n = slice_size(pred), slices = pred.batch() * pred.channels();
  double acc = 0.0;
  for (Index s = 0; s < slices; ++s) {
    const auto y = target.array().segment(s * n, n);
    const double var = (y - y.mean()).square().mean();
    const double mse_v = (pred.array().segment(s * n, n) - y).square().mean();
    acc += std::sqrt(mse_v / (var + eps));
  }
  return acc / static_cast<double>(slices);
}

BandTriple frmse_bands(const Field& pred, const Field& target, const RadialSpec& spec) {
  check_pair(pred, target, "frmse_bands");
  const FreqLossValue v = radial_freq_loss(pred, target, spec, LossConfig{});
  return BandTriple{v.bands.low_mean(), v.bands.mid_mean(), v.bands.high_mean()};
}

std::pair<double, double> melr_wlr(const Field& pred, const Field& target) {
  check_pair(pred, target, "melr_wlr");
  const RealTensor ep = energy_spectrum(pred);
  const RealTensor er = energy_spectrum(target);
  const Index bins = er.dim(-1);
  double melr = 0.0, wlr = 0.0;
  for (Index b = 0; b < pred.batch(); ++b) {
    double m_b = 0.0, w_b = 0.0;
    for (Index c = 0; c < pred.channels(); ++c) {
      const Index off = (b * pred.channels() + c) * bins;
      double total = 0.0, m = 0.0, w = 0.0;
      Index used = 0;
      for (Index k = 0; k < bins; ++k) {
        const double ref = er[off + k];
        if (ref <= 0.0) continue;
        const double lr = std::abs(std::log(ep[off + k] / ref));
        m += lr;
        w += ref * lr;
        total += ref;
        ++used;
      }
      if (used == 0) {
        throw DegenerateTarget("melr/wlr: reference spectrum of sample " + std::to_string(b) +
                               ", channel " + std::to_string(c) + " is zero");
      }
      m_b += m / static_cast<double>(used);
      w_b += w / total;
    }
    melr += m_b / static_cast<double>(pred.channels());
    wlr += w_b / static_cast<double>(pred.channels());
  }
  return {melr / static_cast<double>(pred.batch()), wlr / static_cast<double>(pred.batch())};
}

double pearson(const Field& pred, const Field& target) {
  check_pair(pred, target, "pearson");
  const double tiny = std::numeric_limits<double>::min();
  const Index n = pred.values().size() / pred.batch();
  double acc = 0.0;
  for (Index b = 0; b < pred.batch(); ++b) {
    const auto x = pred.array().segment(b * n, n);
    const auto y = target.array().segment(b * n, n);
    const Eigen::ArrayXd dx = x - x.mean();
    const Eigen::ArrayXd dy = y - y.mean();
    const double cov = (dx * dy).mean();
    // one square root, so identical inputs give exactly 1
    const double sxy = std::sqrt(dx.square().mean() * dy.square().mean());
    acc += cov / std::max(sxy, tiny);
  }
  return acc / static_cast<double>(pred.batch());
}

std::vector<double> pearson_by_timestep(const std::vector<Field>& pred, const std::vector<Field>& target) {
  if (pred.size() != target.size()) throw ShapeError("pearson_by_timestep: trajectory lengths differ");
  std::vector<double> out;
  out.reserve(pred.size());
  for (std::size_t t = 0; t < pred.size(); ++t) out.push_back(pearson(pred[t], target[t]));
  return out;
}

double rel_pct_diff(double candidate, double baseline) {
  if (baseline == 0.0) throw DegenerateBaseline("rel_pct_diff: baseline is zero");
  return (candidate - baseline) / baseline * 100.0;
}

std::vector<std::pair<std::string, double>> MetricReport::scalars() const {
  return {{"rmse", rmse},           {"nrmse", nrmse},         {"brmse", brmse},
          {"crmse", crmse},         {"max_error", max_error}, {"frmse_low", frmse_low},
          {"frmse_mid", frmse_mid}, {"frmse_high", frmse_high}, {"vrmse", vrmse},
          {"melr", melr},           {"wlr", wlr}};
}

nlohmann::json MetricReport::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : scalars()) j[k] = v;
  j["pearson_by_t"] = pearson_by_t;
  return j;
}

MetricReport evaluate_metrics(const Field& pred, const Field& target, const RadialSpec& spec) {
  MetricReport r;
  r.rmse = rmse(pred, target);
  r.nrmse = nrmse(pred, target);
  r.brmse = brmse(pred, target);
  r.crmse = crmse(pred, target);
  r.max_error = max_error(pred, target);
  const BandTriple bands = frmse_bands(pred, target, spec);
  r.frmse_low = bands.low;
  r.frmse_mid = bands.mid;
  r.frmse_high = bands.high;
  r.vrmse = vrmse(pred, target);
  std::tie(r.melr, r.wlr) = melr_wlr(pred, target);
  r.pearson_by_t = {pearson(pred, target)};
  return r;
}

std::string metrics_csv(const std::vector<MetricReport>& reports) {
  std::ostringstream os;
  os.precision(17);
  os << "metric,timestep,value\n";
  for (std::size_t t = 0; t < reports.size(); ++t) {
    for (const auto& [k, v] : reports[t].scalars()) os << k << ',' << t + 1 << ',' << v << '\n';
    for (double p : reports[t].pearson_by_t) os << "pearson," << t + 1 << ',' << p << '\n';
  }
  return os.str();
}

}  // namespace loglo
