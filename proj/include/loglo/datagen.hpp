#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "loglo/field.hpp"

namespace loglo {

inline constexpr int kDatasetSchemaVersion = 1;

struct DatasetMeta {
  std::string pde;             // "heat", "advdiff", "kolmogorov", or free-form
  nlohmann::json params = nlohmann::json::object();
  double dt = 0.0;             // time between stored frames
  double lx = 1.0;
  double ly = 1.0;
  std::vector<std::string> field_names{"u"};
  int schema_version = kDatasetSchemaVersion;
};

/// Trajectories [n_traj, n_t, n_c, nx, ny].
struct Dataset {
  RealTensor data;
  DatasetMeta meta;

  Index n_traj() const { return data.dim(0); }
  Index n_t() const { return data.dim(1); }
  Index n_c() const { return data.dim(2); }
  Index nx() const { return data.dim(3); }
  Index ny() const { return data.dim(4); }

  /// One stored frame as a [1, n_c, nx, ny] field.
  Field frame(Index traj, Index t) const;
  /// Frames [t0, t0 + count) of every trajectory in [traj_begin, traj_end),
  /// stacked as a [trajectories, n_c, nx, ny] field per time index.
  std::vector<Field> frames(Index traj_begin, Index traj_end, Index t0, Index count) const;
  void validate() const;
};

/// Every consecutive (u_t, u_{t+1}) pair of the selected trajectories.
struct PairSet {
  Field inputs;
  Field targets;
  Index size() const { return inputs.batch(); }
};

PairSet make_pairs(const Dataset& ds, Index traj_begin, Index traj_end);

/// Random real fields [n, 1, nx, ny] whose Fourier coefficients are
/// independent unit normals on integer radii <= radius, scaled so the
/// field has unit variance in expectation.
Field random_band_limited(Index n, Index nx, Index ny, double radius, std::uint64_t seed);

/// Exact heat evolution on [0,1)^2: u_hat(k, t) = u_hat(k, 0) exp(-nu |2 pi k|^2 t).
Dataset heat_from_initial(const Field& u0, Index n_t, double nu, double dt);
Dataset gen_heat(Index n_traj, Index nx, Index ny, Index n_t, double nu, double dt, std::uint64_t seed);

/// Exact advection-diffusion on [0,1)^2:
/// u_hat(k, t) = u_hat(k, 0) exp(-(i 2 pi k.v + nu |2 pi k|^2) t).
Dataset advdiff_from_initial(const Field& u0, Index n_t, double nu, std::array<double, 2> velocity,
                             double dt);
Dataset gen_advdiff(Index n_traj, Index nx, Index ny, Index n_t, double nu,
                    std::array<double, 2> velocity, double dt, std::uint64_t seed);

struct KolmogorovConfig {
  double re = 200.0;
  int forcing_n = 4;
  double forcing_amplitude = 1.0;  // 0 disables forcing
  double dt = 0.01;                // solver step
  Index substeps = 1;              // solver steps per stored frame
  double max_cfl = 1.0;
};

/// Pseudo-spectral vorticity solver on [0, 2 pi]^2 for
/// w_t + u.grad w = (1/Re) lap w - n cos(n y), RK4 with an exact viscous
/// integrating factor and 2/3-rule dealiasing. Throws StepSizeError when
/// the advective CFL number exceeds cfg.max_cfl.
Dataset kolmogorov_from_initial(const Field& w0, Index n_t, const KolmogorovConfig& cfg);
/// Initial vorticity is the unit-variance random field times `ic_scale`.
Dataset gen_kolmogorov(Index n_traj, Index nx, Index ny, Index n_t, double re, int forcing_n,
                       double dt, std::uint64_t seed, Index substeps = 1, double ic_scale = 4.0);

/// Directory with meta.json and data.bin (little-endian float32, row-major).
void write_dataset(const Dataset& ds, const std::string& dir);
Dataset read_dataset(const std::string& dir);

}  // namespace loglo
