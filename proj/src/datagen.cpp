#include "loglo/datagen.hpp"

#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>

#include "loglo/fft.hpp"
#include "loglo/parallel.hpp"

namespace loglo {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kMagic = "LOGLO-FLDB/1";
constexpr double kTwoPi = 2.0 * std::numbers::pi;

static_assert(std::endian::native == std::endian::little, "dataset I/O assumes a little-endian host");

Index signed_k(Index i, Index n) { return i <= n / 2 ? i : i - n; }

void require_positive(Index v, const char* name) {
  if (v < 1) throw InvalidInput(std::string(name) + " must be positive");
}

void check_grid(Index nx, Index ny) {
  if (nx < 2 || ny < 2) throw InvalidInput("grid must be at least 2x2");
}

// Evolves each (trajectory, channel) half spectrum by factor(kx, ky, t).
Dataset evolve_spectral(const Field& u0, Index n_t, double dt,
                        const std::function<cplx(Index, Index, double)>& factor) {
  u0.validate("initial condition");
  require_positive(n_t, "n_t");
  const Index nt = u0.batch(), nc = u0.channels(), nx = u0.nx(), ny = u0.ny();
  const ComplexTensor hat0 = rfft2(u0.values(), FftNorm::backward);
  const Index nk = ny / 2 + 1;
  Dataset ds;
  ds.data = RealTensor(Shape{nt, n_t, nc, nx, ny});
  const Index frame = nc * nx * ny;
  for (Index t = 0; t < n_t; ++t) {
    const double time = dt * static_cast<double>(t);
    ComplexTensor hat = hat0;
    for (Index s = 0; s < nt * nc; ++s) {
      for (Index i = 0; i < nx; ++i) {
        const Index kx = signed_k(i, nx);
        for (Index j = 0; j < nk; ++j) hat[(s * nx + i) * nk + j] *= factor(kx, j, time);
      }
    }
    const RealTensor u = irfft2(hat, ny, FftNorm::backward);
    for (Index b = 0; b < nt; ++b) {
      ds.data.array().segment((b * n_t + t) * frame, frame) = u.array().segment(b * frame, frame);
    }
  }
  ds.meta.lx = u0.lx();
  ds.meta.ly = u0.ly();
  ds.meta.dt = dt;
  ds.meta.field_names.clear();
  for (Index c = 0; c < nc; ++c) ds.meta.field_names.push_back(nc == 1 ? "u" : "u" + std::to_string(c));
  return ds;
}

}  // namespace

Field Dataset::frame(Index traj, Index t) const {
  if (traj < 0 || traj >= n_traj() || t < 0 || t >= n_t()) throw InvalidInput("frame index out of range");
  Field f(1, n_c(), nx(), ny(), meta.lx, meta.ly);
  const Index n = n_c() * nx() * ny();
  f.array() = data.array().segment((traj * n_t() + t) * n, n);
  return f;
}

std::vector<Field> Dataset::frames(Index traj_begin, Index traj_end, Index t0, Index count) const {
  if (traj_begin < 0 || traj_end > n_traj() || traj_begin >= traj_end || t0 < 0 || count < 1 ||
      t0 + count > n_t()) {
    throw InvalidInput("frame range out of bounds");
  }
  const Index n = n_c() * nx() * ny();
  std::vector<Field> out;
  for (Index t = t0; t < t0 + count; ++t) {
    Field f(traj_end - traj_begin, n_c(), nx(), ny(), meta.lx, meta.ly);
    for (Index b = traj_begin; b < traj_end; ++b) {
      f.array().segment((b - traj_begin) * n, n) = data.array().segment((b * n_t() + t) * n, n);
    }
    out.push_back(std::move(f));
  }
  return out;
}

void Dataset::validate() const {
  if (data.rank() != 5) throw FormatError("dataset must be [n_traj, n_t, n_c, nx, ny]");
  if (n_t() < 2) throw FormatError("dataset needs at least 2 timesteps");
  if (!data.all_finite()) throw FormatError("dataset contains non-finite values");
  if (static_cast<Index>(meta.field_names.size()) != n_c()) {
    throw FormatError("field_names has " + std::to_string(meta.field_names.size()) + " entries for " +
                      std::to_string(n_c()) + " channels");
  }
}

PairSet make_pairs(const Dataset& ds, Index traj_begin, Index traj_end) {
  if (traj_begin < 0 || traj_end > ds.n_traj() || traj_begin >= traj_end) {
    throw InvalidInput("trajectory range [" + std::to_string(traj_begin) + ", " + std::to_string(traj_end) +
                       ") out of bounds");
  }
  const Index per = ds.n_t() - 1;
  const Index count = (traj_end - traj_begin) * per;
  const Index n = ds.n_c() * ds.nx() * ds.ny();
  PairSet ps{Field(count, ds.n_c(), ds.nx(), ds.ny(), ds.meta.lx, ds.meta.ly),
             Field(count, ds.n_c(), ds.nx(), ds.ny(), ds.meta.lx, ds.meta.ly)};
  Index k = 0;
  for (Index b = traj_begin; b < traj_end; ++b) {
    for (Index t = 0; t < per; ++t, ++k) {
      ps.inputs.array().segment(k * n, n) = ds.data.array().segment((b * ds.n_t() + t) * n, n);
      ps.targets.array().segment(k * n, n) = ds.data.array().segment((b * ds.n_t() + t + 1) * n, n);
    }
  }
  return ps;
}

Field random_band_limited(Index n, Index nx, Index ny, double radius, std::uint64_t seed) {
  require_positive(n, "n");
  check_grid(nx, ny);
  // Half-plane representatives strictly below Nyquist, DC first.
  std::vector<std::pair<Index, Index>> modes{{0, 0}};
  const Index kmax_x = (nx - 1) / 2, kmax_y = (ny - 1) / 2;
  for (Index kx = -kmax_x; kx <= kmax_x; ++kx) {
    for (Index ky = 0; ky <= kmax_y; ++ky) {
      if (ky == 0 && kx <= 0) continue;
      if (static_cast<double>(kx * kx + ky * ky) <= radius * radius) modes.emplace_back(kx, ky);
    }
  }
  const double s = 1.0 / std::sqrt(static_cast<double>(modes.size()));
  const double big_n = static_cast<double>(nx * ny);
  const Index nk = ny / 2 + 1;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  ComplexTensor hat(Shape{n, 1, nx, nk});
  for (Index b = 0; b < n; ++b) {
    cplx* h = hat.data() + b * nx * nk;
    for (const auto& [kx, ky] : modes) {
      const double a = normal(rng);
      if (kx == 0 && ky == 0) {
        h[0] = big_n * s * a;
        continue;
      }
      const cplx c = big_n * s * 0.5 * cplx(a, normal(rng));
      const Index row = (kx + nx) % nx;
      h[row * nk + ky] = c;
      if (ky == 0) h[((nx - kx) % nx) * nk] = std::conj(c);
    }
  }
  return Field(irfft2(hat, ny, FftNorm::backward));
}

Dataset heat_from_initial(const Field& u0, Index n_t, double nu, double dt) {
  if (!(nu >= 0.0)) throw InvalidInput("heat: nu must be non-negative");
  const double lx = u0.lx(), ly = u0.ly();
  Dataset ds = evolve_spectral(u0, n_t, dt, [&](Index kx, Index ky, double t) {
    const double wx = kTwoPi * static_cast<double>(kx) / lx, wy = kTwoPi * static_cast<double>(ky) / ly;
    return cplx(std::exp(-nu * (wx * wx + wy * wy) * t), 0.0);
  });
  ds.meta.pde = "heat";
  ds.meta.params = json{{"nu", nu}};
  return ds;
}

Dataset gen_heat(Index n_traj, Index nx, Index ny, Index n_t, double nu, double dt, std::uint64_t seed) {
  if (!(nu > 0.0)) throw InvalidInput("gen_heat: nu must be positive");
  Field u0 = random_band_limited(n_traj, nx, ny, static_cast<double>(nx) / 4.0, seed);
  Dataset ds = heat_from_initial(u0, n_t, nu, dt);
  ds.meta.params["seed"] = seed;
  return ds;
}

Dataset advdiff_from_initial(const Field& u0, Index n_t, double nu, std::array<double, 2> velocity,
                             double dt) {
  if (!(nu >= 0.0)) throw InvalidInput("advdiff: nu must be non-negative");
  const double lx = u0.lx(), ly = u0.ly();
  Dataset ds = evolve_spectral(u0, n_t, dt, [&](Index kx, Index ky, double t) {
    const double wx = kTwoPi * static_cast<double>(kx) / lx, wy = kTwoPi * static_cast<double>(ky) / ly;
    return std::exp(cplx(-nu * (wx * wx + wy * wy) * t, -(wx * velocity[0] + wy * velocity[1]) * t));
  });
  ds.meta.pde = "advdiff";
  ds.meta.params = json{{"nu", nu}, {"velocity", {velocity[0], velocity[1]}}};
  return ds;
}

Dataset gen_advdiff(Index n_traj, Index nx, Index ny, Index n_t, double nu,
                    std::array<double, 2> velocity, double dt, std::uint64_t seed) {
  Field u0 = random_band_limited(n_traj, nx, ny, static_cast<double>(nx) / 4.0, seed);
  Dataset ds = advdiff_from_initial(u0, n_t, nu, velocity, dt);
  ds.meta.params["seed"] = seed;
  return ds;
}

// ---- Kolmogorov flow --------------------------------------------------------------

namespace {

class VorticitySolver {
 public:
  VorticitySolver(Index nx, Index ny, const KolmogorovConfig& cfg) : nx_(nx), ny_(ny), cfg_(cfg) {
    const Index n = nx * ny;
    kx_.resize(n);
    ky_.resize(n);
    k2_.resize(n);
    mask_.resize(n);
    e_half_.resize(n);
    e_full_.resize(n);
    for (Index i = 0; i < nx; ++i) {
      for (Index j = 0; j < ny; ++j) {
        const Index q = i * ny + j;
        const Index kx = signed_k(i, nx), ky = signed_k(j, ny);
        // Odd derivatives drop the Nyquist mode.
        kx_[q] = (nx % 2 == 0 && i == nx / 2) ? 0.0 : static_cast<double>(kx);
        ky_[q] = (ny % 2 == 0 && j == ny / 2) ? 0.0 : static_cast<double>(ky);
        k2_[q] = static_cast<double>(kx * kx + ky * ky);
        mask_[q] = (3 * std::abs(kx) <= nx && 3 * std::abs(ky) <= ny) ? 1.0 : 0.0;
        const double l = -k2_[q] / cfg.re;
        e_half_[q] = std::exp(l * cfg.dt * 0.5);
        e_full_[q] = std::exp(l * cfg.dt);
      }
    }
    ComplexTensor f(Shape{nx, ny});
    for (Index i = 0; i < nx; ++i) {
      for (Index j = 0; j < ny; ++j) {
        const double y = kTwoPi * static_cast<double>(j) / static_cast<double>(ny);
        f[i * ny + j] = -cfg.forcing_amplitude * cfg.forcing_n * std::cos(cfg.forcing_n * y);
      }
    }
    forcing_ = fft2(f, FftDirection::forward, FftNorm::backward);
    forcing_[0] = 0.0;
  }

  ComplexTensor step(const ComplexTensor& w) const {
    const Eigen::ArrayXcd k1 = cfg_.dt * rhs(w, true).array();
    ComplexTensor s(w.shape());
    s.array() = e_half_ * (w.array() + 0.5 * k1);
    const Eigen::ArrayXcd k2 = cfg_.dt * rhs(s, false).array();
    s.array() = e_half_ * w.array() + 0.5 * k2;
    const Eigen::ArrayXcd k3 = cfg_.dt * rhs(s, false).array();
    s.array() = e_full_ * w.array() + e_half_ * k3;
    const Eigen::ArrayXcd k4 = cfg_.dt * rhs(s, false).array();
    ComplexTensor out(w.shape());
    out.array() = e_full_ * w.array() + (e_full_ * k1 + 2.0 * e_half_ * (k2 + k3) + k4) / 6.0;
    return out;
  }

  RealTensor to_physical(const ComplexTensor& w) const {
    const ComplexTensor p = fft2(w, FftDirection::inverse, FftNorm::backward);
    return RealTensor(Shape{nx_, ny_}, p.array().real());
  }

  ComplexTensor to_spectral(const RealTensor& w) const {
    ComplexTensor c(Shape{nx_, ny_}, w.array().cast<cplx>());
    return fft2(c, FftDirection::forward, FftNorm::backward);
  }

 private:
  Eigen::ArrayXd physical(const Eigen::ArrayXcd& hat) const {
    ComplexTensor c(Shape{nx_, ny_}, hat);
    return fft2(c, FftDirection::inverse, FftNorm::backward).array().real();
  }

  ComplexTensor rhs(const ComplexTensor& w, bool check_cfl) const {
    const cplx i1(0.0, 1.0);
    const Eigen::ArrayXcd& wh = w.array();
    const Eigen::ArrayXd inv_k2 = (k2_ > 0.0).select(1.0 / k2_, 0.0);
    const Eigen::ArrayXcd psi = wh * inv_k2;
    const Eigen::ArrayXd u = physical(i1 * ky_ * psi);
    const Eigen::ArrayXd v = physical(-i1 * kx_ * psi);
    if (check_cfl) {
      const double dx = kTwoPi / static_cast<double>(nx_), dy = kTwoPi / static_cast<double>(ny_);
      const double cfl = cfg_.dt * (u.abs().maxCoeff() / dx + v.abs().maxCoeff() / dy);
      if (!std::isfinite(cfl) || cfl > cfg_.max_cfl) {
        throw StepSizeError("kolmogorov: CFL number " + std::to_string(cfl) + " exceeds " +
                            std::to_string(cfg_.max_cfl) + "; reduce dt");
      }
    }
    const Eigen::ArrayXd wx = physical(i1 * kx_ * wh);
    const Eigen::ArrayXd wy = physical(i1 * ky_ * wh);
    ComplexTensor adv(Shape{nx_, ny_}, (u * wx + v * wy).cast<cplx>());
    ComplexTensor out = fft2(adv, FftDirection::forward, FftNorm::backward);
    out.array() = forcing_.array() - mask_ * out.array();
    out[0] = 0.0;  // the advective term has zero mean analytically
    return out;
  }

  Index nx_, ny_;
  KolmogorovConfig cfg_;
  Eigen::ArrayXd kx_, ky_, k2_, mask_, e_half_, e_full_;
  ComplexTensor forcing_;
};

}  // namespace

Dataset kolmogorov_from_initial(const Field& w0, Index n_t, const KolmogorovConfig& cfg) {
  w0.validate("kolmogorov initial condition");
  require_positive(n_t, "n_t");
  require_positive(cfg.substeps, "substeps");
  if (!(cfg.re > 0.0) || !(cfg.dt > 0.0) || !(cfg.max_cfl > 0.0)) {
    throw InvalidInput("kolmogorov: re, dt and max_cfl must be positive");
  }
  if (w0.channels() != 1) throw ShapeError("kolmogorov: vorticity has one channel");
  const Index nt = w0.batch(), nx = w0.nx(), ny = w0.ny();
  const VorticitySolver solver(nx, ny, cfg);
  Dataset ds;
  ds.data = RealTensor(Shape{nt, n_t, 1, nx, ny});
  const Index frame = nx * ny;
  parallel_for(nt, [&](Index b) {
    RealTensor w(Shape{nx, ny}, w0.array().segment(b * frame, frame));
    ComplexTensor wh = solver.to_spectral(w);
    for (Index t = 0; t < n_t; ++t) {
      if (t > 0) {
        for (Index s = 0; s < cfg.substeps; ++s) wh = solver.step(wh);
      }
      ds.data.array().segment((b * n_t + t) * frame, frame) = solver.to_physical(wh).array();
    }
  });
  ds.meta.pde = "kolmogorov";
  ds.meta.params = json{{"re", cfg.re},
                        {"forcing_n", cfg.forcing_n},
                        {"forcing_amplitude", cfg.forcing_amplitude},
                        {"solver_dt", cfg.dt},
                        {"substeps", cfg.substeps}};
  ds.meta.dt = cfg.dt * static_cast<double>(cfg.substeps);
  ds.meta.lx = kTwoPi;
  ds.meta.ly = kTwoPi;
  ds.meta.field_names = {"vorticity"};
  return ds;
}

Dataset gen_kolmogorov(Index n_traj, Index nx, Index ny, Index n_t, double re, int forcing_n,
                       double dt, std::uint64_t seed, Index substeps, double ic_scale) {
  Field w0 = random_band_limited(n_traj, nx, ny, static_cast<double>(nx) / 4.0, seed);
  w0.array() *= ic_scale;
  w0.set_lengths(kTwoPi, kTwoPi);
  KolmogorovConfig cfg;
  cfg.re = re;
  cfg.forcing_n = forcing_n;
  cfg.dt = dt;
  cfg.substeps = substeps;
  Dataset ds = kolmogorov_from_initial(w0, n_t, cfg);
  ds.meta.params["seed"] = seed;
  ds.meta.params["ic_scale"] = ic_scale;
  return ds;
}

// ---- FLDB files --------------------------------------------------------------------

void write_dataset(const Dataset& ds, const std::string& dir) {
  ds.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
  const fs::path bin = fs::path(dir) / "data.bin";
  std::vector<float> buf(static_cast<std::size_t>(ds.data.size()));
  for (Index i = 0; i < ds.data.size(); ++i) buf[static_cast<std::size_t>(i)] = static_cast<float>(ds.data[i]);
  {
    std::ofstream out(bin, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + bin.string());
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!out) throw IoError("failed writing " + bin.string());
  }
  const json meta{{"magic", kMagic},
                  {"schema_version", ds.meta.schema_version},
                  {"pde", ds.meta.pde},
                  {"params", ds.meta.params},
                  {"dt", ds.meta.dt},
                  {"lx", ds.meta.lx},
                  {"ly", ds.meta.ly},
                  {"field_names", ds.meta.field_names},
                  {"shape", ds.data.shape()},
                  {"dtype", "float32-le"},
                  {"layout", "traj,t,c,x,y"},
                  {"blob", "data.bin"},
                  {"blob_bytes", buf.size() * sizeof(float)}};
  const fs::path mp = fs::path(dir) / "meta.json";
  std::ofstream out(mp, std::ios::trunc);
  if (!out) throw IoError("cannot write " + mp.string());
  out << meta.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + mp.string());
}

Dataset read_dataset(const std::string& dir) {
  const fs::path mp = fs::path(dir) / "meta.json";
  std::ifstream in(mp);
  if (!in) throw IoError("cannot open " + mp.string());
  Dataset ds;
  Shape shape;
  std::string blob;
  try {
    const json meta = json::parse(in);
    if (!meta.is_object() || meta.value("magic", "") != kMagic) throw FormatError("not a dataset: " + mp.string());
    const int version = meta.at("schema_version").get<int>();
    if (version != kDatasetSchemaVersion) {
      throw FormatError("dataset schema_version " + std::to_string(version) + " is not supported (expected " +
                        std::to_string(kDatasetSchemaVersion) + ")");
    }
    if (meta.at("dtype").get<std::string>() != "float32-le") throw FormatError("unsupported dtype");
    ds.meta.schema_version = version;
    ds.meta.pde = meta.at("pde").get<std::string>();
    ds.meta.params = meta.at("params");
    ds.meta.dt = meta.at("dt").get<double>();
    ds.meta.lx = meta.at("lx").get<double>();
    ds.meta.ly = meta.at("ly").get<double>();
    ds.meta.field_names = meta.at("field_names").get<std::vector<std::string>>();
    shape = meta.at("shape").get<Shape>();
    blob = meta.at("blob").get<std::string>();
    if (shape.size() != 5) throw FormatError("dataset shape must have 5 entries");
    for (Index d : shape) {
      if (d < 1) throw FormatError("dataset shape entries must be positive");
    }
    if (meta.at("blob_bytes").get<std::int64_t>() !=
        shape_numel(shape) * static_cast<std::int64_t>(sizeof(float))) {
      throw FormatError("blob_bytes does not match the declared shape");
    }
  } catch (const json::exception& e) {
    throw FormatError("malformed dataset header " + mp.string() + ": " + e.what());
  }
  const fs::path bin = fs::path(dir) / blob;
  std::ifstream bs(bin, std::ios::binary | std::ios::ate);
  if (!bs) throw IoError("cannot open " + bin.string());
  const auto bytes = static_cast<std::int64_t>(bs.tellg());
  const Index count = shape_numel(shape);
  if (bytes != count * static_cast<std::int64_t>(sizeof(float))) {
    throw FormatError("data.bin holds " + std::to_string(bytes) + " bytes, header implies " +
                      std::to_string(count * static_cast<Index>(sizeof(float))));
  }
  bs.seekg(0);
  std::vector<float> buf(static_cast<std::size_t>(count));
  bs.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(bytes));
  if (!bs) throw IoError("failed reading " + bin.string());
  ds.data = RealTensor(shape);
  for (Index i = 0; i < count; ++i) ds.data[i] = static_cast<double>(buf[static_cast<std::size_t>(i)]);
  ds.validate();
  return ds;
}

}  // namespace loglo
