#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "loglo/operator.hpp"
#include "oracles.hpp"

using namespace loglo;
namespace fs = std::filesystem;

namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.width = 6;
  c.n_layers = 2;
  c.modes_x = c.modes_y = 4;
  c.patch = 4;
  return c;
}

RealTensor identity_weights(Index kx, Index bins, Index d) {
  RealTensor w(Shape{kx, bins, d, d, 2});
  for (Index i = 0; i < kx * bins; ++i)
    for (Index c = 0; c < d; ++c) w[((i * d + c) * d + c) * 2] = 1.0;
  return w;
}

Field mode_field(Index n, Index kx, Index ky) {
  Field f(1, 1, n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      f.array()[f.offset(0, 0, i, j)] =
          std::cos(2.0 * std::numbers::pi * static_cast<double>(kx * i + ky * j) / static_cast<double>(n));
  return f;
}

fs::path scratch_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("loglo_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("identity spectral weights with every mode kept reproduce the input") {
  for (Index n : {4, 8, 16}) {
    const Field z(oracle::random_tensor({2, 3, n, n}, static_cast<unsigned>(n)));
    const Field out = spectral_conv(z, identity_weights(n, n / 2 + 1, 3));
    CHECK(oracle::max_abs_diff(out.values(), z.values()) <= 1e-10);
  }
}

TEST_CASE("spectral conv drops modes outside the window") {
  const Index n = 16;
  const RealTensor w = identity_weights(4, 3, 1);  // kx in {0, 1, -2, -1}, ky in {0, 1, 2}
  CHECK(oracle::max_abs_diff(spectral_conv(mode_field(n, 1, 2), w).values(), mode_field(n, 1, 2).values()) <
        1e-12);
  CHECK(spectral_conv(mode_field(n, 3, 0), w).array().abs().maxCoeff() < 1e-12);
  CHECK(spectral_conv(mode_field(n, 0, 5), w).array().abs().maxCoeff() < 1e-12);
  // (2, 1) is outside the window, its conjugate partner (-2, -1) is not stored.
  CHECK(spectral_conv(mode_field(n, 2, 1), w).array().abs().maxCoeff() < 1e-12);
  CHECK(oracle::max_abs_diff(spectral_conv(mode_field(n, n - 2, 1), w).values(),
                             mode_field(n, n - 2, 1).values()) < 1e-12);
}

TEST_CASE("budget formulas") {
  const ParamBudget b = param_budget(2, 65, 40, 4, 16);
  CHECK(b.global_formula == 27'040'000);
  CHECK(b.local_formula == 2'433'600);
  CHECK(b.local_formula < b.global_formula);
  const ParamBudget b3 = param_budget(3, 8, 4, 2, 4);
  CHECK(b3.global_formula == 64 * 64 * 2);
  CHECK(b3.local_formula == 64 * 4 * 4 * 3 * 2);
  CHECK_THROWS_AS(param_budget(1, 8, 4, 2, 4), ConfigError);
  CHECK_THROWS_AS(param_budget(2, 0, 4, 2, 4), ConfigError);
}

TEST_CASE("parameter counts follow the weight shapes") {
  ModelConfig c = small_config();
  c.modes_x = 6;
  c.modes_y = 4;
  const LogloModel m(c, 1);
  const ParamCount pc = count_params(m);
  const std::int64_t d = c.width;
  CHECK(pc.global_spectral == 2 * 6 * (4 / 2 + 1) * d * d * c.n_layers);
  CHECK(pc.local_spectral == 2 * c.patch * (c.patch / 2 + 1) * d * d * c.n_layers);
  std::int64_t sum = 0;
  for (const auto& [k, v] : pc.by_component) sum += v;
  CHECK(sum == pc.total);
  CHECK(pc.by_component.at("lift") == 2 * d);
  CHECK(pc.by_component.at("projection") == d * d + d + d + 1);
  CHECK(pc.by_component.at("hfp") == c.n_layers * 2 * (d * d + d));

  ModelConfig fno = c;
  fno.use_local = false;
  fno.use_hfp = false;
  const ParamCount pf = count_params(LogloModel(fno, 1));
  CHECK(pf.local_spectral == 0);
  CHECK(pf.by_component.at("hfp") == 0);
  CHECK(pf.total == pc.total - pc.by_component.at("local") - pc.by_component.at("hfp"));
}

TEST_CASE("fft flop counts") {
  const FftFlops f = fft_flops(2, 1, 1, 1, 128, 128, 0, 16);
  CHECK(f.global_fwd == 1'146'880.0);
  CHECK(f.global_inv == 1'146'880.0);
  CHECK(f.local_fwd == 5.0 * 16384 * 8);
  const FftFlops same = fft_flops(2, 2, 3, 5, 32, 32, 0, 32);
  CHECK(same.local_fwd == same.global_fwd);
  CHECK(same.local_inv == same.global_inv);
  const FftFlops f3 = fft_flops(3, 1, 1, 1, 8, 8, 8, 8);
  CHECK(f3.local_fwd == f3.global_fwd);
  CHECK_THROWS_AS(fft_flops(2, 0, 1, 1, 8, 8, 0, 4), ConfigError);
}

TEST_CASE("ablated model is the plain FNO stack") {
  ModelConfig c = small_config();
  c.use_local = false;
  c.use_hfp = false;
  const LogloModel m(c, 9);
  for (unsigned s = 0; s < 5; ++s) {
    const Field x(oracle::random_tensor({2, 1, 16, 16}, s));
    const Field a = model_forward(x, m);
    const Field b = fno_forward(x, m);
    CHECK((a.array() == b.array()).all());
  }
}

TEST_CASE("model forward shapes and grid checks") {
  const LogloModel m(small_config(), 2);
  const Field x(oracle::random_tensor({3, 1, 16, 16}, 1));
  const Field y = model_forward(x, m);
  CHECK(y.values().shape() == Shape{3, 1, 16, 16});
  CHECK(y.values().all_finite());
  // Same weights on a finer grid.
  const Field big(oracle::random_tensor({1, 1, 32, 32}, 2));
  CHECK(model_forward(big, m).values().shape() == Shape{1, 1, 32, 32});
  CHECK_THROWS_AS(model_forward(Field(oracle::random_tensor({1, 1, 18, 18}, 3)), m), ShapeError);
  CHECK_THROWS_AS(model_forward(Field(oracle::random_tensor({1, 2, 16, 16}, 3)), m), ShapeError);

  ModelConfig grid = small_config();
  grid.append_coord_grid = true;
  const LogloModel mg(grid, 2);
  CHECK(mg.param("lift.w").shape() == Shape{6, 3});
  CHECK(model_forward(x, mg).values().all_finite());
}

TEST_CASE("high-frequency extraction") {
  Field blocks(1, 2, 8, 8);
  for (Index c = 0; c < 2; ++c)
    for (Index i = 0; i < 8; ++i)
      for (Index j = 0; j < 8; ++j)
        blocks.array()[blocks.offset(0, c, i, j)] = 0.1 * static_cast<double>((i / 4) * 3 + (j / 4) + 10 * c) - 0.37;
  CHECK((hfp_extract(blocks, 4, 4).array() == 0.0).all());

  Field checker(1, 1, 8, 8);
  for (Index i = 0; i < 8; ++i)
    for (Index j = 0; j < 8; ++j) checker.array()[checker.offset(0, 0, i, j)] = (i + j) % 2 ? -1.0 : 1.0;
  CHECK((hfp_extract(checker, 2, 2).array() == checker.array()).all());
}

TEST_CASE("model config json") {
  ModelConfig c = small_config();
  c.hfp_interp = InterpMode::bilinear;
  const ModelConfig r = ModelConfig::from_json(c.to_json());
  CHECK(r == c);
  nlohmann::json bad = c.to_json();
  bad["widht"] = 3;
  CHECK_THROWS_AS(ModelConfig::from_json(bad), ConfigError);
  bad = c.to_json();
  bad["width"] = 0;
  CHECK_THROWS_AS(ModelConfig::from_json(bad), ConfigError);
}

TEST_CASE("checkpoints round-trip and reject mismatches") {
  const fs::path dir = scratch_dir("ckpt");
  const LogloModel m(small_config(), 4);
  const std::string path = save_checkpoint(m, dir.string(), 7);
  CHECK(fs::exists(dir / "checkpoint_7.json"));
  CHECK(fs::exists(dir / "checkpoint_7.bin"));

  const LogloModel r = load_checkpoint(path);
  CHECK(r.config() == m.config());
  for (std::size_t i = 0; i < m.params().size(); ++i) {
    CHECK(r.params()[i].name == m.params()[i].name);
    CHECK((r.params()[i].value.array() == m.params()[i].value.array()).all());
  }
  CHECK((load_checkpoint((dir / "checkpoint_7.bin").string()).params()[0].value.array() ==
         m.params()[0].value.array())
            .all());

  ModelConfig other = small_config();
  other.width = 8;
  CHECK_THROWS_AS(load_checkpoint(path, other), ConfigError);
  CHECK_NOTHROW(load_checkpoint(path, small_config()));

  fs::resize_file(dir / "checkpoint_7.bin", fs::file_size(dir / "checkpoint_7.bin") - 8);
  CHECK_THROWS_AS(load_checkpoint(path), FormatError);
  {
    std::ofstream(dir / "checkpoint_7.json") << "{ not json";
  }
  CHECK_THROWS_AS(load_checkpoint(path), FormatError);
  CHECK_THROWS_AS(load_checkpoint((dir / "missing.json").string()), IoError);
  fs::remove_all(dir);
}
