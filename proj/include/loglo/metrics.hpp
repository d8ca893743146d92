#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "loglo/spectra.hpp"

namespace loglo {

// Every metric takes [b, c, nx, ny] fields; a time axis is folded into c so
// per-(b, c, t) slices are the per-(b, channel) slices here.

double rmse(const Field& pred, const Field& target);
/// Mean over slices of ||e|| / ||y||. Throws DegenerateTarget on a zero-norm target slice.
double nrmse(const Field& pred, const Field& target);
/// Mean over channels of the max |e| over (batch, space).
double max_error(const Field& pred, const Field& target);
/// Four-edge boundary RMSE with corners counted on both edges.
double brmse(const Field& pred, const Field& target);
/// RMS over batch of the spatial-sum error, divided by nx ny, mean over channels.
double crmse(const Field& pred, const Field& target);
/// Mean over slices of sqrt(MSE / (Var(target) + 1e-8)).
double vrmse(const Field& pred, const Field& target);

struct BandTriple {
  double low = 0.0;
  double mid = 0.0;
  double high = 0.0;
};

/// Same computation as the radial frequency loss, reduced by mean over channels.
BandTriple frmse_bands(const Field& pred, const Field& target, const RadialSpec& spec);

/// Energy-spectrum log-ratio metrics over radial bins with nonzero
/// reference energy, per (b, c) slice, averaged over c then b.
std::pair<double, double> melr_wlr(const Field& pred, const Field& target);

/// Pearson correlation per (b, t) over all channels and space, averaged over
/// b; one entry per frame of the trajectories.
std::vector<double> pearson_by_timestep(const std::vector<Field>& pred, const std::vector<Field>& target);
double pearson(const Field& pred, const Field& target);

/// (candidate - baseline) / baseline * 100. Throws DegenerateBaseline when baseline == 0.
double rel_pct_diff(double candidate, double baseline);

struct MetricReport {
  double rmse = 0.0;
  double nrmse = 0.0;
  double brmse = 0.0;
  double crmse = 0.0;
  double max_error = 0.0;
  double frmse_low = 0.0;
  double frmse_mid = 0.0;
  double frmse_high = 0.0;
  double vrmse = 0.0;
  double melr = 0.0;
  double wlr = 0.0;
  std::vector<double> pearson_by_t;

  nlohmann::json to_json() const;
  /// (name, value) pairs in a fixed order, excluding pearson.
  std::vector<std::pair<std::string, double>> scalars() const;
};

MetricReport evaluate_metrics(const Field& pred, const Field& target, const RadialSpec& spec);

/// CSV with header "metric,timestep,value"; reports[i] describes timestep i + 1.
std::string metrics_csv(const std::vector<MetricReport>& reports);

}  // namespace loglo
