#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "loglo/fft.hpp"
#include "loglo/field.hpp"
#include "loglo/resample.hpp"
#include "loglo/spectra.hpp"

namespace loglo::ad {

using Value = std::variant<RealTensor, ComplexTensor>;

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  Tape& tape() const { return *tape_; }
  Index id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  bool is_complex() const;
  const RealTensor& real() const;
  const ComplexTensor& complex() const;
  const Shape& shape() const;
  /// Value of a single-element real node.
  double item() const;

 private:
  friend class Tape;
  Var(Tape* tape, Index id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  Index id_ = -1;
};

/// Eager reverse-mode tape. Every op computes its value immediately and,
/// when any input requires a gradient, records an adjoint closure. Node ids
/// are creation order, so reverse id order is a reverse topological order.
class Tape {
 public:
  /// The adjoint owns `grad_out` for the duration of the call and may
  /// consume it (it is discarded afterwards).
  using Backward = std::function<void(Tape&, Value& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(RealTensor value);
  Var constant(ComplexTensor value);
  /// Leaf that accumulates a gradient.
  Var variable(RealTensor value);

  /// Records an op. `backward` may be empty only for ops without an adjoint;
  /// reaching such a node during backward() raises UnsupportedOp.
  Var record(Value value, std::string op, std::initializer_list<Var> inputs, Backward backward);

  bool requires_grad(const Var& v) const { return nodes_[static_cast<std::size_t>(v.id())].requires_grad; }
  const Value& value(Index id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  const std::string& op(Index id) const { return nodes_[static_cast<std::size_t>(id)].op; }
  Index size() const { return static_cast<Index>(nodes_.size()); }

  /// Seeds d(loss)/d(loss) = 1 and propagates to every reachable node.
  void backward(const Var& loss);

  /// Gradient of a real leaf (zeros when nothing reached it). Interior
  /// adjoints are released during backward().
  RealTensor grad(const Var& v) const;
  ComplexTensor complex_grad(const Var& v) const;

  void accumulate(const Var& v, RealTensor g);
  void accumulate(const Var& v, ComplexTensor g);
  /// Like accumulate, without a temporary when v already has an adjoint.
  void accumulate_copy(const Var& v, const RealTensor& g);
  void accumulate_copy(const Var& v, const ComplexTensor& g);
  /// Number of nodes whose adjoint ran in the last backward().
  Index visited() const { return visited_; }

 private:
  struct Node {
    Value value;
    std::optional<Value> grad;
    bool requires_grad = false;
    bool has_inputs = false;
    std::string op;
    Backward backward;
  };
  std::vector<Node> nodes_;
  Index visited_ = 0;
};

// ---- elementwise and reductions ------------------------------------------
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var square(const Var& a);
/// Subgradient 0 at exactly zero.
Var sqrt(const Var& a);
/// Exact GELU x * Phi(x) (erf form).
Var gelu(const Var& a);
Var sum(const Var& a);
Var mean(const Var& a);
/// Gradient routed to the first maximal element.
Var max(const Var& a);
/// Mean over axis 0: [n, ...] -> [...].
Var mean_axis0(const Var& a);
/// Sum of w * a with a constant weight tensor of equal size.
Var dot_const(const Var& a, const RealTensor& w);
Var reshape(const Var& a, Shape shape);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }

// ---- channel mixing -----------------------------------------------------
/// out[b, o, ...] = sum_i w[o, i] x[b, i, ...] + bias[o]; bias may be invalid.
Var channel_linear(const Var& x, const Var& w, const Var& bias);
/// out[b, c, ...] = scale[c] x[b, c, ...] + bias[c].
Var soft_gate(const Var& x, const Var& scale, const Var& bias);

// ---- spectral -------------------------------------------------------------
Var rfft2(const Var& x, FftNorm norm);
Var irfft2(const Var& x, Index ny, FftNorm norm);
/// Real [..., 2] (re, im pairs) viewed as complex [...].
Var as_complex(const Var& x);
Var abs2(const Var& x);

/// Retained-mode layout: `kx_modes` rows ordered as the ceil(K/2) lowest
/// non-negative then floor(K/2) highest (negative) frequencies, and the
/// first `ky_modes` half-spectrum bins.
struct ModeWindow {
  Index kx_modes = 0;
  Index ky_modes = 0;
  Index kx_index(Index i, Index nx) const { return retained_kx(i, kx_modes, nx); }
};

/// rfft2 restricted to `window`: [..., nx, ny] -> [..., kx_modes, ky_modes].
Var rdft2_modes(const Var& x, ModeWindow window, FftNorm norm);
/// irfft2 of a windowed half spectrum: [..., kx_modes, ky_modes] -> [..., nx, ny].
Var irdft2_modes(const Var& s, Index nx, Index ny, FftNorm norm);

/// Per-mode complex channel contraction on a half spectrum
/// [B, Cin, ..., nx, nk] with weights complex [kx_modes, ky_modes, Cout, Cin].
/// Non-retained modes of the output are zero.
Var spectral_contract(const Var& xhat, const Var& weights, ModeWindow window);

// ---- resampling / patching -------------------------------------------------
Var avg_pool2(const Var& x, Index kernel, Index stride);
Var interpolate2(const Var& x, Index out_nx, Index out_ny, InterpMode mode);
Var extract_patches(const Var& x, Index patch);
Var reassemble_patches(const Var& x, Index grid_x, Index grid_y);

// ---- radial binning --------------------------------------------------------
Var bin_quadrant(const Var& half_spectrum, const RadialSpec& spec);
Var band_means(const Var& binned, const RadialSpec& spec);

/// Applies `fn` without an adjoint; gradients reaching it raise UnsupportedOp.
Var opaque(const Var& x, const std::function<RealTensor(const RealTensor&)>& fn, std::string name);

/// Exact GELU on a tensor (no tape).
double gelu(double x);

struct GradResult {
  double loss = 0.0;
  std::vector<RealTensor> grads;
};

/// Evaluates loss_fn on fresh leaves built from `params` and returns the
/// loss with exact reverse-mode gradients matching `params`.
GradResult grad(const std::function<Var(Tape&, std::span<const Var>)>& loss_fn,
                std::span<const RealTensor> params);

}  // namespace loglo::ad
